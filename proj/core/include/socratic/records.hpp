#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "socratic/agents.hpp"

namespace socratic {

/// Rendered prompts behind one turn. The learner prompt is absent when the
/// turn failed before the learner was asked.
struct TurnPrompts {
  int turn = 0;
  std::string tutor_prompt;
  std::optional<std::string> learner_prompt;

  bool operator==(const TurnPrompts&) const = default;
};

/// A transcript plus its audit trail. Shared by the simulator (one JSONL
/// line per conversation) and the session server (GET /api/sessions/{id}).
struct ConversationRecord {
  Transcript transcript;
  int conversation_index = 0;
  std::int64_t seed = 0;
  std::vector<TurnPrompts> prompts;
  std::optional<int> failed_at;  // turn whose generation failed
  std::string error;
  nlohmann::json extra_meta = nlohmann::json::object();

  bool failed() const noexcept { return failed_at.has_value(); }

  bool operator==(const ConversationRecord&) const = default;
};

nlohmann::json record_to_json(const ConversationRecord& record);

/// Throws DataError describing the first schema violation.
void validate_record_json(const nlohmann::json& j);

/// Validates then converts. Throws DataError.
ConversationRecord record_from_json(const nlohmann::json& j);

/// Reads every non-blank line of a JSONL file. Throws DataError with the
/// file name and line number on the first bad record.
std::vector<ConversationRecord> read_records(const std::filesystem::path& path);

/// ISO-8601 UTC timestamp with second resolution.
std::string utc_timestamp();

}  // namespace socratic
