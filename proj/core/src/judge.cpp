#include "socratic/judge.hpp"

#include <nlohmann/json.hpp>

#include "socratic/agents.hpp"
#include "socratic/error.hpp"
#include "socratic/util.hpp"

namespace socratic {

std::string render_judge_prompt(std::string_view question, std::string_view learner_text) {
  static const PromptTemplate tmpl(std::string(kJudgeTemplate), {"tok_question", "learner_response"});
  return tmpl.render({{"tok_question", std::string(question)}, {"learner_response", std::string(learner_text)}});
}

namespace {

std::string strip_code_fences(std::string_view text) {
  std::string out;
  for (const auto& line : split(text, '\n')) {
    if (trim_view(line).starts_with("```")) continue;
    out += line;
    out += '\n';
  }
  return out;
}

// Index one past the brace closing the object that opens at `start`, or
// npos. Braces inside JSON strings do not count.
std::size_t balanced_end(std::string_view s, std::size_t start) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = start; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

std::optional<int> score_field(const nlohmann::json& obj) {
  if (!obj.is_object()) return std::nullopt;
  auto it = obj.find("Score");
  if (it == obj.end()) {
    for (auto jt = obj.begin(); jt != obj.end(); ++jt) {
      if (starts_with_icase(jt.key(), "score") && jt.key().size() == 5) {
        it = jt;
        break;
      }
    }
  }
  if (it == obj.end() || !it->is_number_integer()) return std::nullopt;
  const auto v = it->get<std::int64_t>();
  if (v < 0 || v > 5) return std::nullopt;
  return static_cast<int>(v);
}

}  // namespace

std::optional<int> extract_judge_score(std::string_view completion) {
  const std::string text = strip_code_fences(completion);
  std::size_t pos = text.find('{');
  while (pos != std::string::npos) {
    const std::size_t end = balanced_end(text, pos);
    if (end != std::string_view::npos) {
      const auto obj = nlohmann::json::parse(text.substr(pos, end - pos), nullptr, false);
      if (!obj.is_discarded()) {
        if (auto score = score_field(obj)) return score;
      }
    }
    pos = text.find('{', pos + 1);
  }
  return std::nullopt;
}

LlmScore llm_score(std::string_view question, std::string_view learner_text, ChatBackend& judge,
                   const GenerationParams& params, int attempts) {
  if (attempts < 1) throw PreconditionError("llm_score: attempts must be >= 1");
  if (trim_view(learner_text).empty()) throw PreconditionError("llm_score: learner text is empty");
  const std::vector<ChatMessage> messages = {user_message(render_judge_prompt(question, learner_text))};
  LlmScore out;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    std::string completion;
    try {
      completion = judge.chat_complete(messages, params);
    } catch (const BackendError& e) {
      out.missing_reason = kMissingBackendError;
      out.error = e.what();
      return out;
    }
    out.completions.push_back(completion);
    if (auto score = extract_judge_score(completion)) {
      out.raw_score = *score;
      out.value = *score / 5.0;
      return out;
    }
  }
  out.missing_reason = kMissingParseFailure;
  return out;
}

}  // namespace socratic
