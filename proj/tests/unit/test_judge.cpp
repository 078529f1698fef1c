#include <gtest/gtest.h>

#include "scripted.hpp"
#include "socratic/error.hpp"
#include "socratic/judge.hpp"

namespace socratic {
namespace {

using testing::ScriptedChat;

TEST(JudgePrompt, IsVerbatimWithSubstitutions) {
  const auto p = render_judge_prompt("Is replicability necessary?", "It helps verify claims.");
  EXPECT_TRUE(p.starts_with(
      "You are an AI evaluator specializing in assessing if a discourse uses critical thinking."));
  EXPECT_NE(p.find("forming well-reasoned judgements and decisions."), std::string::npos);
  EXPECT_NE(p.find("the question: Is replicability necessary?  use critical thinking"), std::string::npos);
  EXPECT_NE(p.find("The provided answers It helps verify claims.."), std::string::npos);
  EXPECT_NE(p.find("PROVIDE THE ANSWER IN A JSON FORMAT"), std::string::npos);
  EXPECT_EQ(p.find("{tok_question}"), std::string::npos);
  EXPECT_EQ(p.find("{learner_response}"), std::string::npos);
}

TEST(ExtractScore, FindsFirstValidObject) {
  EXPECT_EQ(extract_judge_score(R"({"Score": 4} The answer analyses evidence.)"), 4);
  EXPECT_EQ(extract_judge_score("```json\n{\"Score\": 2}\n```\nBecause..."), 2);
  EXPECT_EQ(extract_judge_score(R"(Rating: {"note": "a } brace", "Score": 3})"), 3);
  EXPECT_EQ(extract_judge_score(R"({"x": 1} then {"Score": 5})"), 5);
  EXPECT_EQ(extract_judge_score(R"({"score": 1})"), 1);
  EXPECT_EQ(extract_judge_score(R"({"Score": {"inner": 1}})"), std::nullopt);
}

TEST(ExtractScore, RejectsInvalid) {
  for (const char* s : {"Score: excellent", R"({"Score": 6})", R"({"Score": -1})", R"({"Score": 3.5})",
                        R"({"Score": "4"})", "{", "", R"({"Rating": 3})"}) {
    EXPECT_EQ(extract_judge_score(s), std::nullopt) << s;
  }
}

TEST(LlmScore, NormalizesEveryScore) {
  for (int k = 0; k <= 5; ++k) {
    ScriptedChat judge(std::vector<std::string>{"{\"Score\": " + std::to_string(k) + "} because"});
    const auto s = llm_score("Q?", "answer", judge);
    ASSERT_TRUE(s.value);
    EXPECT_EQ(*s.value, k / 5.0);
    EXPECT_EQ(s.raw_score, k);
    EXPECT_TRUE(s.missing_reason.empty());
  }
}

TEST(LlmScore, ParseFailureAfterThreeAttempts) {
  ScriptedChat judge(std::vector<std::string>{"Score: excellent", "Score: excellent", "Score: excellent", "{\"Score\": 5}"});
  const auto s = llm_score("Q?", "answer", judge);
  EXPECT_FALSE(s.value);
  EXPECT_EQ(s.missing_reason, kMissingParseFailure);
  EXPECT_EQ(s.completions.size(), 3u);
  EXPECT_EQ(judge.call_count(), 3);
}

TEST(LlmScore, RetriesUntilParseable) {
  ScriptedChat judge(std::vector<std::string>{"hmm", "{\"Score\": 3}"});
  const auto s = llm_score("Q?", "answer", judge);
  EXPECT_EQ(s.value, 0.6);
  EXPECT_EQ(judge.call_count(), 2);
}

TEST(LlmScore, BackendFailureIsDistinct) {
  ScriptedChat judge(std::vector<std::string>{});
  const auto s = llm_score("Q?", "answer", judge);
  EXPECT_FALSE(s.value);
  EXPECT_EQ(s.missing_reason, kMissingBackendError);
  EXPECT_FALSE(s.error.empty());
}

TEST(LlmScore, UsesJudgeParamsAndPrompt) {
  ScriptedChat judge(std::vector<std::string>{"{\"Score\": 1}"});
  llm_score("Question?", "Learner words", judge);
  const auto calls = judge.calls();
  ASSERT_EQ(calls.size(), 1u);
  EXPECT_EQ(calls[0].messages[0].content, render_judge_prompt("Question?", "Learner words"));
  EXPECT_EQ(calls[0].params.temperature, 0.0);
  EXPECT_EQ(calls[0].params.max_tokens, 512);
}

TEST(LlmScore, Preconditions) {
  ScriptedChat judge(std::vector<std::string>{"{\"Score\": 1}"});
  EXPECT_THROW(llm_score("Q?", "", judge), PreconditionError);
  EXPECT_THROW(llm_score("Q?", "a", judge, GenerationParams::judge(), 0), PreconditionError);
}

}  // namespace
}  // namespace socratic
