#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "socratic/backend.hpp"

namespace socratic {

/// Placeholders are {tok_question} and {learner_response}.
inline constexpr std::string_view kJudgeTemplate =
    "You are an AI evaluator specializing in assessing if a discourse uses critical thinking.\n"
    "Here a definition of critical thinking:\n"
    "It is the analytical thinking which underlies all rational discourse and enquiry. It is characterised by a "
    "meticulous and rigorous approach. As an academic discipline, it is unique in that it explicitly focuses on "
    "the processes involved in being rational. These processes include: analysing arguments, judging the "
    "relevance and significance of information, evaluating claims, inferences, arguments and explanations, "
    "constructing clear and coherent arguments, forming well-reasoned judgements and decisions.\n"
    "Carefully check if the answers of the question: {tok_question}  use critical thinking. Your primary goal "
    "is to rate the answers based on the use of critical thinking. The provided answers {learner_response}.\n"
    "PROVIDE THE ANSWER IN A JSON FORMAT WITH FOLLOWING FIELD:\n"
    "\"Score\" -int | Score from 0 to 5 Then explain your rating.";

inline constexpr const char* kMissingParseFailure = "parse-failure";
inline constexpr const char* kMissingBackendError = "backend-error";

std::string render_judge_prompt(std::string_view question, std::string_view learner_text);

/// Finds the first balanced-brace JSON object with an integer "Score" in
/// 0..5, after dropping markdown code-fence lines. nullopt when none.
std::optional<int> extract_judge_score(std::string_view completion);

struct LlmScore {
  std::optional<double> value;  // Score / 5
  std::optional<int> raw_score;
  std::string missing_reason;  // set when value is empty
  std::vector<std::string> completions;
  std::string error;  // backend failure text
};

/// Asks the judge up to `attempts` times until a completion parses. After
/// that the score is missing with reason "parse-failure" and every raw
/// completion kept. A backend failure yields reason "backend-error" and
/// never counts as a parse failure.
LlmScore llm_score(std::string_view question, std::string_view learner_text, ChatBackend& judge,
                   const GenerationParams& params = GenerationParams::judge(), int attempts = 3);

}  // namespace socratic
