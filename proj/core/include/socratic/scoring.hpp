#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "socratic/agents.hpp"
#include "socratic/backend.hpp"
#include "socratic/corpus.hpp"
#include "socratic/metrics.hpp"

namespace socratic {

enum class Metric { kBleu, kRougeL, kMeteor, kBertScore, kLlm };

/// "bleu", "rouge_l", "meteor", "bertscore", "llm".
std::string_view to_string(Metric metric) noexcept;

/// Which metrics a scoring pass computes.
class MetricSet {
 public:
  MetricSet() = default;
  static MetricSet all();
  /// Comma-separated names; "all" selects everything. Throws
  /// PreconditionError on unknown or empty names.
  static MetricSet parse(std::string_view list);

  bool contains(Metric m) const noexcept { return (bits_ >> static_cast<int>(m)) & 1U; }
  MetricSet& add(Metric m) noexcept {
    bits_ |= 1U << static_cast<int>(m);
    return *this;
  }
  bool empty() const noexcept { return bits_ == 0; }
  std::string to_string() const;

 private:
  unsigned bits_ = 0;
};

/// Scores for one (transcript, turn prefix) pair. A metric that was not
/// requested or failed is empty; failures are listed in `errors`.
struct ScoreVector {
  std::optional<double> bleu;
  std::optional<double> rouge_l;
  std::optional<double> meteor;
  std::optional<double> bert_p;
  std::optional<double> bert_r;
  std::optional<double> bert_f1;
  std::optional<double> llm;
  std::string llm_missing_reason;
  std::map<std::string, std::string> errors;  // metric name -> message

  bool operator==(const ScoreVector&) const = default;
};

struct ScoringBackends {
  Embedder* embedder = nullptr;  // required for bertscore
  ChatBackend* judge = nullptr;  // required for llm
  GenerationParams judge_params = GenerationParams::judge();
  int judge_attempts = 3;
};

struct ScoringOptions {
  MetricSet metrics = MetricSet::all();
  MeteorOptions meteor;
};

/// One ScoreVector per turn, computed on cumulative_learner_text(t)
/// against the item's reference summary. Metric errors are recorded per
/// turn and never abort the remaining turns. Throws PreconditionError when
/// the transcript has no turns or a selected metric lacks its backend.
std::vector<ScoreVector> score_transcript(const Transcript& transcript, const ToKItem& item,
                                          const ScoringBackends& backends, const ScoringOptions& options = {});

struct ScoreRow {
  std::string run_id;
  std::string tutor;
  int question_id = 0;
  int conversation_index = 0;
  int turn = 0;
  ScoreVector scores;

  bool operator==(const ScoreRow&) const = default;
};

inline constexpr std::string_view kScoresHeader =
    "run_id,tutor,question_id,conversation_index,turn,bleu,rouge_l,meteor,bert_p,bert_r,bert_f1,llm,"
    "llm_missing_reason";

/// Header plus one line per row; numbers use the shortest round-trip form.
void write_scores_csv(std::ostream& out, const std::vector<ScoreRow>& rows);
void write_scores_csv(const std::filesystem::path& path, const std::vector<ScoreRow>& rows);

/// Throws DataError with the line number on malformed input.
std::vector<ScoreRow> read_scores_csv(std::istream& in, std::string_view source = "<stream>");
std::vector<ScoreRow> read_scores_csv(const std::filesystem::path& path);

struct ScoreRunOptions {
  ScoringOptions scoring;
  /// Also score the completed turns of conversations that failed.
  bool include_partials = false;
  int max_in_flight = 4;
};

struct ScoreRunResult {
  std::vector<ScoreRow> rows;
  int conversations_scored = 0;
  int conversations_excluded = 0;  // failed, or no complete turn
  int metric_errors = 0;
};

/// Scores every record of a run directory in manifest order. Rows come out
/// sorted by cell, conversation index and turn whatever the scheduling.
ScoreRunResult score_run(const std::filesystem::path& run_dir, const QuestionBank& bank,
                         const ScoringBackends& backends, const ScoreRunOptions& options = {});

}  // namespace socratic
