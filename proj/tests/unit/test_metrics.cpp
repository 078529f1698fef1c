#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "scripted.hpp"
#include "socratic/error.hpp"
#include "socratic/metrics.hpp"
#include "socratic/mock_backend.hpp"

namespace socratic {
namespace {

using Tokens = std::vector<std::string>;

Tokens random_tokens(std::mt19937& rng, std::size_t min_len, std::size_t max_len, int vocab) {
  static const char* kWords[] = {"the", "cat", "sat", "on", "mat", "a", "dog", "knowledge", "is", "power"};
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_int_distribution<int> word(0, vocab - 1);
  Tokens t(len(rng));
  for (auto& w : t) w = kWords[word(rng)];
  return t;
}

TEST(Bleu, IdentityIsHundred) {
  EXPECT_DOUBLE_EQ(bleu({"a", "b", "c", "d"}, {"a", "b", "c", "d"}), 100.0);
  EXPECT_DOUBLE_EQ(bleu({"a", "b"}, {"a", "b"}), 100.0);
  EXPECT_DOUBLE_EQ(bleu({"a"}, {"a"}), 100.0);
}

TEST(Bleu, EmptyCandidateAndReference) {
  EXPECT_EQ(bleu({}, {"a"}), 0.0);
  EXPECT_THROW(bleu({"a"}, {}), PreconditionError);
}

TEST(Bleu, RepeatedTokenCaseMatchesOracle) {
  const Tokens cand = {"the", "the", "the", "the"};
  const Tokens ref = {"the", "cat"};
  // p1 = 1/4 (clipped); orders 2..4 have no matches: 1/(2*3), 1/(4*2), 1/(8*1).
  const double hand = 100.0 * std::pow(0.25 * (1.0 / 6) * (1.0 / 8) * (1.0 / 8), 0.25);
  EXPECT_NEAR(bleu(cand, ref), hand, 1e-9);
  EXPECT_NEAR(bleu(cand, ref), oracle::bleu(cand, ref), 1e-9);
}

TEST(Bleu, BrevityPenalty) {
  const Tokens ref = {"a", "b", "c", "d", "e", "f", "g", "h"};
  const Tokens cand = {"a", "b", "c", "d"};
  EXPECT_NEAR(bleu(cand, ref), 100.0 * std::exp(1.0 - 2.0), 1e-9);
}

TEST(Bleu, MatchesBruteForceOnRandomPairs) {
  std::mt19937 rng(20240501);
  for (int i = 0; i < 1000; ++i) {
    const Tokens cand = random_tokens(rng, 0, 12, 5);
    const Tokens ref = random_tokens(rng, 1, 12, 5);
    ASSERT_NEAR(bleu(cand, ref), oracle::bleu(cand, ref), 1e-9) << i;
  }
}

TEST(RougeL, SpecExamples) {
  EXPECT_DOUBLE_EQ(rouge_l({"a", "b", "c"}, {"a", "b", "c"}), 1.0);
  EXPECT_NEAR(rouge_l({"the", "cat"}, {"the", "cat", "sat"}), 0.8, 1e-12);
  EXPECT_EQ(oracle::lcs_brute_force({"the", "cat"}, {"the", "cat", "sat"}), 2);
  EXPECT_EQ(rouge_l({"x", "y"}, {"a", "b"}), 0.0);
  EXPECT_EQ(rouge_l({}, {"a"}), 0.0);
  EXPECT_THROW(rouge_l({"a"}, {}), PreconditionError);
}

TEST(RougeL, MatchesBruteForceOnRandomPairs) {
  std::mt19937 rng(7);
  for (int i = 0; i < 1000; ++i) {
    const Tokens cand = random_tokens(rng, 0, 12, 6);
    const Tokens ref = random_tokens(rng, 1, 12, 6);
    ASSERT_NEAR(rouge_l(cand, ref), oracle::rouge_l(cand, ref), 1e-9) << i;
  }
}

TEST(RougeL, AppendingReferenceTokensNeverLowersRecall) {
  std::mt19937 rng(99);
  for (int i = 0; i < 300; ++i) {
    Tokens cand = random_tokens(rng, 0, 8, 6);
    const Tokens ref = random_tokens(rng, 1, 10, 6);
    int prev = oracle::lcs_brute_force(cand, ref);
    for (int k = 0; k < 3; ++k) {
      cand.push_back(ref[rng() % ref.size()]);
      const int now = oracle::lcs_brute_force(cand, ref);
      ASSERT_GE(now, prev);
      prev = now;
    }
  }
}

TEST(Ranges, HoldOnRandomSequences) {
  std::mt19937 rng(3);
  for (int i = 0; i < 500; ++i) {
    const Tokens cand = random_tokens(rng, 0, 12, 10);
    const Tokens ref = random_tokens(rng, 1, 12, 10);
    const double b = bleu(cand, ref);
    const double r = rouge_l(cand, ref);
    const double m = meteor(cand, ref);
    EXPECT_GE(b, 0.0);
    EXPECT_LE(b, 100.0 + 1e-9);
    EXPECT_GE(r, 0.0);
    EXPECT_LE(r, 1.0);
    EXPECT_GE(m, 0.0);
    EXPECT_LE(m, 1.0);
  }
}

TEST(Identity, EveryMetricPeaksOnItself) {
  std::mt19937 rng(5);
  HashEmbedder embedder;
  for (int i = 0; i < 200; ++i) {
    const Tokens x = random_tokens(rng, 1, 12, 10);
    EXPECT_NEAR(bleu(x, x), 100.0, 1e-9);
    EXPECT_DOUBLE_EQ(rouge_l(x, x), 1.0);
    const double n = static_cast<double>(x.size());
    EXPECT_NEAR(meteor(x, x), 1.0 - 0.5 / (n * n * n), 1e-12);
  }
  const auto s = bertscore("Knowledge is power", "Knowledge is power", embedder);
  EXPECT_NEAR(s.f1, 1.0, 1e-6);
}

TEST(CumulativeLearnerText, JoinsRepliesWithoutOpener) {
  Transcript t = Transcript::start(TutorKind::kSocratic, default_bank().get(1));
  t.turns = {{1, "q1", "A"}, {2, "q2", "B"}, {3, "q3", "C"}};
  EXPECT_EQ(cumulative_learner_text(t, 2), "A B");
  EXPECT_EQ(cumulative_learner_text(t, 3), "A B C");
  EXPECT_THROW(cumulative_learner_text(t, 4), PreconditionError);
  EXPECT_THROW(cumulative_learner_text(t, 0), PreconditionError);
}

TokenEmbeddings emb(std::vector<std::vector<double>> v) {
  TokenEmbeddings e;
  for (std::size_t i = 0; i < v.size(); ++i) e.tokens.push_back("t" + std::to_string(i));
  e.vectors = std::move(v);
  return e;
}

TEST(BertScore, HandComputedTwoByTwo) {
  const double h = std::sqrt(2.0) / 2;
  const auto s = bertscore_from_embeddings(emb({{1, 0}, {0, 1}}), emb({{1, 0}, {h, h}}));
  // Cosine matrix rows (candidate): [1, h], [0, h]. Row maxima 1, h; column maxima 1, h.
  const double expected = (1 + h) / 2;
  EXPECT_NEAR(s.precision, expected, 1e-6);
  EXPECT_NEAR(s.recall, expected, 1e-6);
  EXPECT_NEAR(s.f1, expected, 1e-6);
}

TEST(BertScore, AsymmetricCase) {
  // Candidate has an extra unrelated token: P drops, R stays 1.
  const auto s = bertscore_from_embeddings(emb({{1, 0, 0}, {0, 0, 2}}), emb({{3, 0, 0}}));
  EXPECT_NEAR(s.precision, 0.5, 1e-12);
  EXPECT_NEAR(s.recall, 1.0, 1e-12);
  EXPECT_NEAR(s.f1, 2 * 0.5 / 1.5, 1e-12);
}

TEST(BertScore, OrthogonalIsZero) {
  const auto s = bertscore_from_embeddings(emb({{1, 0, 0}}), emb({{0, 1, 0}, {0, 0, 1}}));
  EXPECT_EQ(s.f1, 0.0);
}

TEST(BertScore, OppositeVectorsKeepF1InRange) {
  const auto s = bertscore_from_embeddings(emb({{1, 0}}), emb({{-1, 0}}));
  EXPECT_NEAR(s.precision, -1.0, 1e-12);
  EXPECT_GE(s.f1, -1.0);
  EXPECT_LE(s.f1, 1.0);
}

TEST(BertScore, Errors) {
  EXPECT_THROW(bertscore_from_embeddings(emb({{0, 0}}), emb({{1, 0}})), DataError);
  EXPECT_THROW(bertscore_from_embeddings(emb({{1, 0}}), emb({{1, 0, 0}})), PreconditionError);
  EXPECT_THROW(bertscore_from_embeddings(emb({}), emb({{1, 0}})), PreconditionError);
  HashEmbedder h;
  EXPECT_THROW(bertscore("", "ref", h), PreconditionError);
  EXPECT_THROW(bertscore("cand", "  ", h), PreconditionError);
  testing::DownEmbedder down;
  EXPECT_THROW(bertscore("a", "b", down), BackendError);
}

TEST(BertScore, ScriptedEmbedderEndToEnd) {
  testing::TableEmbedder e;
  e.set("cand", emb({{1, 0}, {0, 1}}));
  e.set("ref", emb({{1, 0}, {std::sqrt(0.5), std::sqrt(0.5)}}));
  const auto s = bertscore("cand", "ref", e);
  EXPECT_NEAR(s.f1, (1 + std::sqrt(0.5)) / 2, 1e-6);
}

TEST(BertScore, RangeOnHashEmbeddings) {
  HashEmbedder h;
  std::mt19937 rng(11);
  for (int i = 0; i < 100; ++i) {
    Tokens a = random_tokens(rng, 1, 10, 10), b = random_tokens(rng, 1, 10, 10);
    std::string sa, sb;
    for (auto& w : a) sa += w + " ";
    for (auto& w : b) sb += w + " ";
    const auto s = bertscore(sa, sb, h);
    EXPECT_GE(s.f1, -1.0);
    EXPECT_LE(s.f1, 1.0 + 1e-12);
  }
}

}  // namespace
}  // namespace socratic
