#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "socratic/agents.hpp"
#include "socratic/corpus.hpp"
#include "socratic/records.hpp"

namespace socratic {

struct ConversationOptions {
  GenerationParams tutor_params = GenerationParams::dialogue();
  GenerationParams learner_params = GenerationParams::dialogue();
  const TemplateSet* templates = &TemplateSet::defaults();
  bool record_timestamps = false;
};

/// Plays one tutor/learner dialogue for `turns` turns. Both agents receive
/// `seed`. A BackendError stops the dialogue: the record keeps every
/// complete turn and sets failed_at to the turn that broke.
/// Throws PreconditionError when turns < 1.
ConversationRecord run_conversation(ChatBackend& tutor_backend, ChatBackend& learner_backend, TutorKind kind,
                                    const ToKItem& item, int turns, std::int64_t seed,
                                    const ConversationOptions& options = {});

/// base_seed + a stable 31-bit hash of (kind, question id, conversation index).
std::int64_t conversation_seed(std::int64_t base_seed, TutorKind kind, int question_id, int conversation_index);

struct ExperimentConfig {
  std::vector<TutorKind> tutor_kinds = {TutorKind::kSocratic, TutorKind::kBasic, TutorKind::kRandom};
  std::vector<int> question_ids;  // empty means every id in the bank
  int conversations_per_cell = 20;
  int turns_per_conversation = 5;
  GenerationParams tutor_params = GenerationParams::dialogue();
  GenerationParams learner_params = GenerationParams::dialogue();
  std::int64_t base_seed = 0;
  std::filesystem::path output_dir = "runs/default";
  std::string run_id;  // defaults to the output directory's name
  int max_in_flight = 4;
  /// A cell stops scheduling new conversations after this many failures in a row.
  int max_consecutive_failures = 5;
  bool record_timestamps = true;

  /// Throws PreconditionError.
  void validate() const;
  std::string effective_run_id() const;
};

struct CellSummary {
  TutorKind kind = TutorKind::kSocratic;
  int question_id = 0;
  std::string file;  // relative to the run directory
  int records = 0;   // written, including failed ones
  int failed = 0;
  int skipped = 0;  // never started because the cell was aborted
  bool aborted = false;
};

struct RunManifest {
  std::string run_id;
  nlohmann::json config;
  std::vector<CellSummary> cells;

  int total_records() const;
  int total_failed() const;
  int total_skipped() const;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

inline constexpr const char* kManifestFile = "manifest.json";

/// File name for one (tutor, question) cell, e.g. "socratic_q1.jsonl".
std::string cell_file_name(TutorKind kind, int question_id);

/// Runs the tutors x questions x conversations grid with at most
/// max_in_flight conversations at a time and writes one JSONL file per
/// cell plus manifest.json. Output bytes depend only on the config and the
/// backend replies, never on scheduling order.
RunManifest run_experiment(const ExperimentConfig& config, const QuestionBank& bank, ChatBackend& tutor_backend,
                           ChatBackend& learner_backend, const TemplateSet& templates = TemplateSet::defaults());

/// Throws DataError when the directory has no readable manifest.
RunManifest load_manifest(const std::filesystem::path& run_dir);

}  // namespace socratic
