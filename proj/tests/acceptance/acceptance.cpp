// Acceptance gate: one PASS/FAIL line per criterion. Exit status is nonzero
// when any hard criterion fails; the live-backend check is reported but soft.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "scripted.hpp"
#include "socratic/agents.hpp"
#include "socratic/error.hpp"
#include "socratic/http_backend.hpp"
#include "socratic/judge.hpp"
#include "socratic/metrics.hpp"
#include "socratic/mock_backend.hpp"
#include "socratic/report.hpp"
#include "socratic/scoring.hpp"
#include "socratic/simulator.hpp"
#include "socratic/stats.hpp"
#include "socratic/text.hpp"

namespace fs = std::filesystem;
using namespace socratic;
using Tokens = std::vector<std::string>;

namespace {

// Collects the first few failure messages of one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    if (failures_.size() < 5) failures_.push_back(what);
    ++count_;
  }
  void near(double got, double want, double tol, const std::string& what) {
    std::ostringstream s;
    s.precision(15);
    s << what << ": got " << got << ", want " << want;
    expect(std::fabs(got - want) <= tol, s.str());
  }
  bool ok() const { return count_ == 0; }
  std::string detail() const {
    std::string out;
    for (const auto& f : failures_) out += "\n    " + f;
    if (count_ > static_cast<int>(failures_.size()))
      out += "\n    ... " + std::to_string(count_ - static_cast<int>(failures_.size())) + " more";
    return out;
  }

 private:
  std::vector<std::string> failures_;
  int count_ = 0;
};

Tokens random_tokens(std::mt19937& rng, std::size_t min_len, std::size_t max_len) {
  static const char* kWords[] = {"the", "cat", "sat", "on", "mat", "a", "dog"};
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_int_distribution<int> word(0, 4);
  Tokens t(len(rng));
  for (auto& w : t) w = kWords[word(rng)];
  return t;
}

TokenEmbeddings emb(std::vector<std::vector<double>> v) {
  TokenEmbeddings e;
  for (std::size_t i = 0; i < v.size(); ++i) e.tokens.push_back("t" + std::to_string(i));
  e.vectors = std::move(v);
  return e;
}

double fmean(double m, double c, double r) {
  const double p = m / c, rec = m / r;
  return 10 * p * rec / (rec + 9 * p);
}

void metric_oracles(Check& c) {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937 rng(7);
  for (int i = 0; i < 1000; ++i) {
    const Tokens cand = random_tokens(rng, 0, 12);
    const Tokens ref = random_tokens(rng, 1, 12);
    c.near(bleu(cand, ref), oracle::bleu(cand, ref), 1e-9, "bleu pair " + std::to_string(i));
    c.near(rouge_l(cand, ref), oracle::rouge_l(cand, ref), 1e-9, "rouge_l pair " + std::to_string(i));
  }

  struct Case {
    Tokens cand, ref;
    double score;
  };
  const std::vector<Case> meteor_cases = {
      {{"knowledge"}, {"knowledge"}, 0.5},
      {{"a", "b", "c", "d", "e", "f"}, {"a", "b", "c", "d", "e", "f"}, 1.0 - 0.5 / 216},
      {{"x", "y"}, {"a", "b"}, 0.0},
      {{"the", "cat", "sat"}, {"the", "cat", "sat", "on", "the", "mat"}, fmean(3, 3, 6) * (1 - 0.5 / 27)},
      {{"c", "b", "a"}, {"a", "b", "c"}, 0.5},
      {{"running"}, {"run"}, 0.5},
      {{"cats", "sat"}, {"the", "cat", "sat"}, fmean(2, 2, 3) * (1 - 0.5 / 8)},
      {{"connect", "connected"}, {"connected"}, fmean(1, 2, 1) * 0.5},
      {{"a", "b", "a", "b"}, {"a", "b"}, fmean(2, 4, 2) * (1 - 0.5 / 8)},
      {{"b", "c", "a"}, {"a", "b", "c"}, 1.0 - 0.5 * 8.0 / 27},
      {{"the", "the"}, {"the"}, fmean(1, 2, 1) * 0.5},
      {{"a", "x", "b"}, {"a", "b"}, fmean(2, 3, 2) * 0.5},
  };
  for (std::size_t i = 0; i < meteor_cases.size(); ++i)
    c.near(meteor(meteor_cases[i].cand, meteor_cases[i].ref), meteor_cases[i].score, 1e-12,
           "meteor case " + std::to_string(i));
  c.expect(meteor({"knowledge"}, {"knowledge"}) == 0.5, "single-token identity is not exactly 0.5");

  const double h = std::sqrt(2.0) / 2;
  auto b = bertscore_from_embeddings(emb({{1, 0}, {0, 1}}), emb({{1, 0}, {h, h}}));
  c.near(b.f1, (1 + h) / 2, 1e-6, "bertscore 2x2 f1");
  b = bertscore_from_embeddings(emb({{1, 0, 0}, {0, 0, 2}}), emb({{3, 0, 0}}));
  c.near(b.precision, 0.5, 1e-6, "bertscore asymmetric precision");
  c.near(b.recall, 1.0, 1e-6, "bertscore asymmetric recall");
  c.near(b.f1, 2.0 / 3, 1e-6, "bertscore asymmetric f1");
  b = bertscore_from_embeddings(emb({{1, 0, 0}}), emb({{0, 1, 0}, {0, 0, 1}}));
  c.near(b.f1, 0.0, 1e-6, "bertscore orthogonal f1");

  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.expect(secs < 10.0, "runtime " + std::to_string(secs) + " s");
}

void statistics_oracle(Check& c) {
  const std::vector<double> a = {1, 2, 3}, b = {4, 5, 6};
  auto r = welch_t_test(a, b);
  c.near(r.t, -3.6742, 1e-4, "t");
  c.near(r.df, 4.0, 1e-4, "df");
  c.near(r.p, 0.02131, 1e-4, "p");

  const std::vector<std::pair<std::vector<double>, std::vector<double>>> cases = {
      {{0.1, 0.4, 0.35, 0.8}, {0.9, 0.7, 0.85, 0.95, 0.6}},
      {{10, 12, 9, 11, 10, 13}, {10.5, 11, 10, 12}},
      {{1, 1.5}, {3, 2, 4, 5, 1, 7, 8}},
      {{0.5, 0.52, 0.49, 0.51}, {0.2, 0.9, 0.4, 0.7}},
      {{100, 140, 120}, {80, 85, 90, 95, 60, 75}},
      {{-1, -2, -3.5, 0.5}, {2, 3.5, 1, 0}},
  };
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto got = welch_t_test(cases[i].first, cases[i].second);
    const auto want = oracle::welch(cases[i].first, cases[i].second);
    c.near(got.t, want.t, 1e-9, "case " + std::to_string(i) + " t");
    c.near(got.df, want.df, 1e-9, "case " + std::to_string(i) + " df");
    c.near(got.p, want.p, 1e-8, "case " + std::to_string(i) + " p");
  }
  r = welch_t_test(std::vector<double>{0.3, 0.5, 0.7}, std::vector<double>{0.3, 0.5, 0.7});
  c.expect(r.t == 0.0 && r.p == 1.0, "identical samples do not give t = 0, p = 1");
}

void template_fidelity(Check& c) {
  const ToKItem& item = default_bank().get(1);
  auto tutor = [&](TutorKind k) { return render_tutor_prompt(k, item, "Student: hi", "hi").at(0).content; };
  auto has = [&](const std::string& text, std::string_view needle, const std::string& what) {
    c.expect(text.find(needle) != std::string::npos, what + " lacks \"" + std::string(needle) + "\"");
  };
  has(tutor(TutorKind::kSocratic), "You are a strict Socratic philosopher.", "socratic prompt");
  has(tutor(TutorKind::kBasic), "DO NOT HELP HIM", "basic prompt");
  has(tutor(TutorKind::kRandom), "random and meaningless text", "random prompt");
  has(tutor(TutorKind::kBaseline), "Help me think about the question", "baseline prompt");

  auto golden = [](const std::string& name) {
    std::string s = socratic::testing::read_file(fs::path(SOCRATIC_TEST_DATA) / "golden" / ("prompt_" + name + ".txt"));
    while (!s.empty() && s.back() == '\n') s.pop_back();
    return s;
  };
  for (TutorKind k : kAllTutorKinds) {
    c.expect(render_tutor_prompt(k, item, "<<HISTORY>>", "<<INPUT>>").at(0).content == golden(std::string(to_string(k))),
             std::string(to_string(k)) + " prompt differs from its golden file");
  }
  c.expect(render_learner_prompt("<<INPUT>>").at(0).content == golden("learner"),
           "learner prompt differs from its golden file");

  std::mt19937 rng(3);
  for (int i = 0; i < 200; ++i) {
    const auto words = random_tokens(rng, 1, 10);
    std::string question;
    for (const auto& w : words) question += w + " ";
    question += "?";
    const auto prompt = render_learner_prompt(question).at(0).content;
    has(prompt, "IN ONE SENTENCE", "learner prompt");
    c.expect(prompt.find("Student:") == std::string::npos && prompt.find("Tutor:") == std::string::npos,
             "learner prompt carries history");
    has(prompt, question, "learner prompt");
  }
}

struct PipelineOutput {
  std::map<std::string, std::string> files;
  int records = 0;
  int rows = 0;
};

PipelineOutput run_pipeline(const fs::path& dir) {
  MockChatBackend chat;
  HashEmbedder embedder;
  ExperimentConfig config;  // 3 tutors x 5 questions x 20 conversations x 5 turns
  config.output_dir = dir / "run";
  config.run_id = "acceptance";
  config.base_seed = 2024;
  config.record_timestamps = false;
  const RunManifest manifest = run_experiment(config, default_bank(), chat, chat);

  ScoringBackends backends;
  backends.embedder = &embedder;
  backends.judge = &chat;
  const auto scored = score_run(config.output_dir, default_bank(), backends);
  write_scores_csv(config.output_dir / "scores.csv", scored.rows);

  const auto rows = read_scores_csv(config.output_dir / "scores.csv");
  const auto table = aggregate(rows);
  emit_report(table, significance_tests(rows, table.tutors), dir / "report");
  return {socratic::testing::snapshot_tree(dir), manifest.total_records(), static_cast<int>(rows.size())};
}

void pipeline_determinism(Check& c) {
  const auto t0 = std::chrono::steady_clock::now();
  socratic::testing::TempDir a, b;
  const auto first = run_pipeline(a.path());
  const auto second = run_pipeline(b.path());
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  c.expect(first.records == 300, "expected 300 conversations, got " + std::to_string(first.records));
  c.expect(first.rows == 1500, "expected 1500 score rows, got " + std::to_string(first.rows));
  c.expect(first.files.size() == second.files.size(), "runs wrote different file sets");
  for (const auto& [name, content] : first.files) {
    auto it = second.files.find(name);
    c.expect(it != second.files.end() && it->second == content, name + " differs between runs");
  }
  c.expect(first.files.count("report/summary.csv") == 1, "report/summary.csv missing");
  c.expect(secs < 60.0, "two full runs took " + std::to_string(secs) + " s");
}

void fixture_reproduction(Check& c) {
  const fs::path dir = fs::path(SOCRATIC_TEST_DATA) / "fixtures";
  const auto table = load_means_fixture(dir / "published_means.json");
  const std::string csv = summary_csv(table);
  c.expect(csv == socratic::testing::read_file(dir / "published_means_summary.csv"), "summary layout differs");
  c.expect(csv.find("\nSocratic Llama2 7B,3.42,0.162,0.216,0.576,0.670\n") != std::string::npos,
           "Socratic 7B row not reproduced");
}

void llm_score_contract(Check& c) {
  const ToKItem& item = default_bank().get(1);
  for (int k = 0; k <= 5; ++k) {
    socratic::testing::ScriptedChat judge(std::vector<std::string>{"{\"Score\": " + std::to_string(k) + "}"});
    const auto s = llm_score(item.question, "answer", judge);
    c.expect(s.value && *s.value == k / 5.0, "Score " + std::to_string(k) + " did not give k/5");
  }
  socratic::testing::ScriptedChat bad(std::vector<std::string>{"no idea", "still none", "{\"Score\": \"high\"}"});
  const auto missing = llm_score(item.question, "answer", bad);
  c.expect(!missing.value && missing.missing_reason == kMissingParseFailure,
           "three unparseable outputs did not yield missing");
  c.expect(bad.call_count() == 3, "judge not asked exactly three times");

  std::vector<ScoreRow> rows(2);
  for (int i = 0; i < 2; ++i) {
    rows[i].run_id = "r";
    rows[i].tutor = "socratic";
    rows[i].question_id = 1;
    rows[i].conversation_index = i;
    rows[i].turn = 1;
    rows[i].scores.bleu = 10.0 * (i + 1);
    rows[i].scores.rouge_l = 0.1;
  }
  rows[0].scores.llm = 0.8;
  rows[1].scores.llm_missing_reason = kMissingParseFailure;
  const auto table = aggregate(rows);
  const auto llm = table.summary("socratic", "llm");
  const auto bl = table.summary("socratic", "bleu");
  c.expect(llm.mean && *llm.mean == 0.8 && llm.n == 1 && llm.excluded == 1, "llm mean does not exclude the row");
  c.expect(bl.mean && *bl.mean == 15.0 && bl.n == 2, "other metrics lost the row");
}

// Directional check against a real model server. Returns false when no
// backend is configured.
bool live_ordering(Check& c) {
  const char* chat_url = std::getenv(kChatUrlEnv);
  const char* embed_url = std::getenv(kEmbedUrlEnv);
  if (!chat_url || !*chat_url || !embed_url || !*embed_url) return false;

  HttpChatClient chat(EndpointConfig::from_env(kChatUrlEnv));
  HttpEmbedClient embedder(EndpointConfig::from_env(kEmbedUrlEnv));
  socratic::testing::TempDir dir;
  ExperimentConfig config;
  config.question_ids = {1};
  config.conversations_per_cell = 5;
  config.turns_per_conversation = 5;
  config.output_dir = dir / "run";
  config.max_in_flight = 2;
  run_experiment(config, default_bank(), chat, chat);

  ScoringBackends backends;
  backends.embedder = &embedder;
  ScoreRunOptions options;
  options.scoring.metrics = MetricSet::parse("meteor,bertscore");
  const auto table = aggregate(score_run(config.output_dir, default_bank(), backends, options).rows);
  for (std::string_view metric : {"bert_f1", "meteor"}) {
    const auto random = table.summary("random", metric).mean;
    c.expect(random.has_value(), "no random " + std::string(metric) + " mean");
    for (const std::string& tutor : table.tutors) {
      if (tutor == "random" || !random) continue;
      const auto other = table.summary(tutor, metric).mean;
      c.expect(other && *random < *other, "random not below " + tutor + " on " + std::string(metric));
    }
  }
  return true;
}

}  // namespace

int main() {
  int hard_failures = 0;
  auto criterion = [&](const char* name, const std::function<void(Check&)>& body) {
    Check c;
    try {
      body(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    std::cout << (c.ok() ? "PASS " : "FAIL ") << name << c.detail() << std::endl;
    if (!c.ok()) ++hard_failures;
  };

  criterion("metric-oracles: bleu/rouge_l vs brute force, meteor and bertscore hand cases", metric_oracles);
  criterion("statistics-oracle: welch_t_test vs reference values and Boost.Math", statistics_oracle);
  criterion("template-fidelity: tutor golden prompts, learner prompt without history", template_fidelity);
  criterion("pipeline-determinism: 300-conversation mock simulate/score/report is byte-identical",
            pipeline_determinism);
  criterion("fixture-reproduction: published means laid out as the results table", fixture_reproduction);
  criterion("llm-score-contract: k/5 scores, missing after three parse failures, per-metric exclusion",
            llm_score_contract);

  Check live;
  bool ran = false;
  try {
    ran = live_ordering(live);
  } catch (const std::exception& e) {
    ran = true;
    live.expect(false, std::string("exception: ") + e.what());
  }
  const char* label = "live-ordering (soft): random tutor lowest on BERTScore and METEOR, question 1, 5x5";
  if (!ran) {
    std::cout << "SKIP " << label << "\n    set " << kChatUrlEnv << " and " << kEmbedUrlEnv << " to run it"
              << std::endl;
  } else {
    std::cout << (live.ok() ? "PASS " : "FAIL ") << label << live.detail() << std::endl;
  }

  std::cout << (hard_failures == 0 ? "acceptance: all hard criteria passed" : "acceptance: hard criteria failed")
            << std::endl;
  return hard_failures == 0 ? 0 : 1;
}
