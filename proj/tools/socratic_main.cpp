// socratic: simulate tutoring dialogues, score them, report, or serve live sessions.

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "socratic/agents.hpp"
#include "socratic/corpus.hpp"
#include "socratic/error.hpp"
#include "socratic/http_backend.hpp"
#include "socratic/mock_backend.hpp"
#include "socratic/report.hpp"
#include "socratic/scoring.hpp"
#include "socratic/server.hpp"
#include "socratic/simulator.hpp"
#include "socratic/stats.hpp"
#include "socratic/util.hpp"

namespace {

using namespace socratic;

enum ExitCode { kOk = 0, kUsage = 1, kBackend = 2, kData = 3 };

// Accepts TOML (CLI11's own reader) or a JSON object whose nested objects
// are subcommand sections, e.g. {"simulate": {"turns": 3}}.
class JsonOrTomlConfig : public CLI::ConfigTOML {
 public:
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    std::string text((std::istreambuf_iterator<char>(input)), std::istreambuf_iterator<char>());
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos || text[first] != '{') {
      std::istringstream again(text);
      return CLI::ConfigTOML::from_config(again);
    }
    const auto doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw CLI::ConversionError("config file is not a JSON object");
    std::vector<CLI::ConfigItem> items;
    add_items(doc, {}, items);
    return items;
  }

 private:
  static std::string scalar(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static void add_items(const nlohmann::json& obj, const std::vector<std::string>& parents,
                        std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : obj.items()) {
      if (value.is_object()) {
        auto sub = parents;
        sub.push_back(key);
        add_items(value, sub, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
  }
};

struct BackendFlags {
  bool mock = false;
  std::string chat_url;
  std::string judge_url;
  std::string embed_url;
  std::string api_key;
  int retries = 3;
  int parallel = 4;
};

void add_backend_flags(CLI::App* cmd, BackendFlags& f, bool chat, bool embed, bool judge) {
  cmd->add_flag("--mock", f.mock, "Use the built-in deterministic mock backends")->envname("SOCRATIC_MOCK");
  if (chat)
    cmd->add_option("--chat-url", f.chat_url, "Chat-completions endpoint base URL")->envname(kChatUrlEnv);
  if (judge)
    cmd->add_option("--judge-url", f.judge_url, "Judge endpoint base URL (defaults to --chat-url)")
        ->envname("SOCRATIC_JUDGE_URL");
  if (embed)
    cmd->add_option("--embed-url", f.embed_url, "Token-embedding endpoint base URL")->envname(kEmbedUrlEnv);
  cmd->add_option("--api-key", f.api_key, "Bearer token for the endpoints")->envname(kApiKeyEnv);
  cmd->add_option("--retries", f.retries, "Retries after a failed backend request")
      ->envname("SOCRATIC_RETRIES")
      ->check(CLI::Range(0, 10))
      ->capture_default_str();
  cmd->add_option("--parallel", f.parallel, "Maximum backend calls in flight")
      ->envname("SOCRATIC_PARALLEL")
      ->check(CLI::Range(1, 256))
      ->capture_default_str();
}

// Owns whichever backends a subcommand needs, wrapped in one shared limiter.
class Backends {
 public:
  explicit Backends(const BackendFlags& f) : flags_(f), limiter_(std::make_shared<ConcurrencyLimiter>(f.parallel)) {}

  ChatBackend& chat() { return throttled_chat(chat_, flags_.chat_url, "--chat-url"); }
  ChatBackend& judge() {
    return throttled_chat(judge_, flags_.judge_url.empty() ? flags_.chat_url : flags_.judge_url, "--judge-url");
  }
  Embedder& embedder() {
    if (!embed_) {
      if (flags_.mock) {
        embed_inner_ = std::make_unique<HashEmbedder>();
      } else {
        embed_inner_ = std::make_unique<HttpEmbedClient>(endpoint(flags_.embed_url, "--embed-url"));
      }
      embed_ = std::make_unique<ThrottledEmbedder>(*embed_inner_, limiter_);
    }
    return *embed_;
  }

 private:
  struct Chat {
    std::unique_ptr<ChatBackend> inner;
    std::unique_ptr<ChatBackend> outer;
  };

  EndpointConfig endpoint(const std::string& url, const char* flag) const {
    if (url.empty()) throw PreconditionError(std::string("no backend configured: pass ") + flag + " or --mock");
    EndpointConfig c;
    c.base_url = url;
    c.api_key = flags_.api_key;
    c.retry.max_retries = flags_.retries;
    return c;
  }

  ChatBackend& throttled_chat(Chat& slot, const std::string& url, const char* flag) {
    if (!slot.outer) {
      if (flags_.mock) {
        slot.inner = std::make_unique<MockChatBackend>();
      } else {
        slot.inner = std::make_unique<HttpChatClient>(endpoint(url, flag));
      }
      slot.outer = std::make_unique<ThrottledChatBackend>(*slot.inner, limiter_);
    }
    return *slot.outer;
  }

  BackendFlags flags_;
  std::shared_ptr<ConcurrencyLimiter> limiter_;
  Chat chat_, judge_;
  std::unique_ptr<Embedder> embed_inner_, embed_;
};

QuestionBank bank_from(const std::string& path) { return path.empty() ? default_bank() : load_bank(path); }

std::vector<int> parse_question_ids(const std::string& list, const QuestionBank& bank) {
  if (trim(list) == "all") return bank.ids();
  std::vector<int> ids;
  for (const auto& part : split(list, ',')) {
    const std::string s = trim(part);
    int id = 0;
    try {
      std::size_t used = 0;
      id = std::stoi(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      throw PreconditionError("--questions: '" + s + "' is not a question id");
    }
    bank.get(id);
    ids.push_back(id);
  }
  if (ids.empty()) throw PreconditionError("--questions is empty");
  return ids;
}

std::vector<TutorKind> parse_tutors(const std::string& list) {
  std::vector<TutorKind> kinds;
  for (const auto& part : split(list, ',')) kinds.push_back(tutor_kind_from_string(trim(part)));
  if (kinds.empty()) throw PreconditionError("--tutors is empty");
  return kinds;
}

struct SimulateFlags {
  std::string tutors = "socratic,basic,random";
  std::string questions = "all";
  int conversations = 20;
  int turns = 5;
  std::int64_t seed = 0;
  std::string out = "runs/default";
  std::string run_id;
  std::string bank;
  std::string templates;
  std::string tutor_model = "default";
  std::string learner_model = "default";
  double temperature = 0.7;
  double top_p = 0.95;
  int max_tokens = 256;
  int max_consecutive_failures = 5;
  std::optional<bool> timestamps;
  BackendFlags backend;
};

int run_simulate(const SimulateFlags& f) {
  const QuestionBank bank = bank_from(f.bank);
  const TemplateSet templates = f.templates.empty() ? TemplateSet() : TemplateSet::with_overrides(f.templates);
  ExperimentConfig config;
  config.tutor_kinds = parse_tutors(f.tutors);
  config.question_ids = parse_question_ids(f.questions, bank);
  config.conversations_per_cell = f.conversations;
  config.turns_per_conversation = f.turns;
  config.base_seed = f.seed;
  config.output_dir = f.out;
  config.run_id = f.run_id;
  config.max_in_flight = f.backend.parallel;
  config.max_consecutive_failures = f.max_consecutive_failures;
  config.tutor_params.model = f.tutor_model;
  config.learner_params.model = f.learner_model;
  for (auto* p : {&config.tutor_params, &config.learner_params}) {
    p->temperature = f.temperature;
    p->top_p = f.top_p;
    p->max_tokens = f.max_tokens;
  }
  // Wall-clock fields would make mock runs differ byte for byte.
  config.record_timestamps = f.timestamps.value_or(!f.backend.mock);

  Backends backends(f.backend);
  ChatBackend& chat = backends.chat();
  const RunManifest manifest = run_experiment(config, bank, chat, chat, templates);
  std::cerr << "simulate: " << manifest.total_records() << " conversations written to " << config.output_dir.string()
            << " (" << manifest.total_failed() << " failed, " << manifest.total_skipped() << " skipped)\n";
  if (manifest.total_records() > 0 && manifest.total_failed() == manifest.total_records()) {
    std::cerr << "simulate: every conversation failed; check the backend\n";
    return kBackend;
  }
  return kOk;
}

struct ScoreFlags {
  std::string run_dir;
  std::string out;
  std::string metrics = "all";
  bool include_partials = false;
  std::string bank;
  std::string judge_model = "default";
  std::size_t meteor_beam = 32;
  BackendFlags backend;
};

int run_score(const ScoreFlags& f) {
  const QuestionBank bank = bank_from(f.bank);
  ScoreRunOptions options;
  options.scoring.metrics = MetricSet::parse(f.metrics);
  options.scoring.meteor.beam_width = f.meteor_beam;
  options.include_partials = f.include_partials;
  options.max_in_flight = f.backend.parallel;

  Backends backends(f.backend);
  ScoringBackends sb;
  if (options.scoring.metrics.contains(Metric::kBertScore)) sb.embedder = &backends.embedder();
  if (options.scoring.metrics.contains(Metric::kLlm)) sb.judge = &backends.judge();
  sb.judge_params.model = f.judge_model;

  const ScoreRunResult result = score_run(f.run_dir, bank, sb, options);
  const std::filesystem::path out =
      f.out.empty() ? std::filesystem::path(f.run_dir) / "scores.csv" : std::filesystem::path(f.out);
  write_scores_csv(out, result.rows);
  std::cerr << "score: " << result.rows.size() << " rows from " << result.conversations_scored
            << " conversations written to " << out.string() << " (" << result.conversations_excluded
            << " excluded, " << result.metric_errors << " metric errors)\n";

  int backend_metrics = 0;
  if (sb.embedder) ++backend_metrics;
  if (sb.judge) ++backend_metrics;
  const auto possible = static_cast<long>(result.rows.size()) * backend_metrics;
  if (possible > 0 && result.metric_errors >= possible) {
    std::cerr << "score: every backend-scored metric failed; check the backends\n";
    return kBackend;
  }
  return kOk;
}

struct ReportFlags {
  std::string scores;
  std::string means;
  std::string out;
  std::string unit = "final-turn";
};

int run_report(const ReportFlags& f) {
  if (f.scores.empty() == f.means.empty()) throw PreconditionError("report needs either a scores CSV or --means");
  const SamplingUnit unit = parse_sampling_unit(f.unit);
  AggregateTable table;
  std::vector<SignificanceEntry> tests;
  std::filesystem::path out = f.out;
  if (!f.scores.empty()) {
    const auto rows = read_scores_csv(f.scores);
    if (rows.empty()) throw DataError(f.scores + ": no score rows");
    table = aggregate(rows);
    tests = significance_tests(rows, table.tutors, unit);
    if (out.empty()) out = std::filesystem::path(f.scores).parent_path() / "report";
  } else {
    table = load_means_fixture(f.means);
    if (out.empty()) out = "report";
  }
  const auto written = emit_report(table, tests, out);
  std::cout << summary_csv(table);
  std::cerr << "report: " << written.size() << " files written to " << out.string() << "\n";
  return kOk;
}

struct ServeFlags {
  std::string host = "127.0.0.1";
  int port = 8731;
  std::string static_dir;
  std::string persist;
  bool live_score = false;
  std::string bank;
  std::string templates;
  std::string tutor_model = "default";
  std::string judge_model = "default";
  BackendFlags backend;
};

SessionServer* g_server = nullptr;

int run_serve(const ServeFlags& f) {
  const QuestionBank bank = bank_from(f.bank);
  const TemplateSet templates = f.templates.empty() ? TemplateSet() : TemplateSet::with_overrides(f.templates);
  Backends backends(f.backend);
  ServerConfig config;
  config.host = f.host;
  config.port = f.port;
  config.static_dir = f.static_dir;
  config.persist_path = f.persist;
  config.live_scoring = f.live_score;
  config.tutor_params.model = f.tutor_model;
  config.judge_params.model = f.judge_model;
  SessionServer server(bank, backends.chat(), f.live_score ? &backends.judge() : nullptr, config, templates);
  const int port = server.bind();
  std::cerr << "serve: listening on http://" << f.host << ":" << port << "\n";
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  server.listen();
  g_server = nullptr;
  return kOk;
}

int run_bank_list(const std::string& bank_path, bool as_json) {
  const QuestionBank bank = bank_from(bank_path);
  if (as_json) {
    std::cout << bank.to_json();
    return kOk;
  }
  for (const auto& item : bank.items()) std::cout << item.id << '\t' << item.question << '\n';
  return kOk;
}

int main_impl(int argc, char** argv) {
  CLI::App app{"Socratic tutoring dialogues: simulate, score, report and serve"};
  app.name("socratic");
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<JsonOrTomlConfig>());
  app.set_config("--config", "", "TOML or JSON file with flag values")->envname("SOCRATIC_CONFIG");
  app.set_version_flag("--version", "socratic 0.1.0");

  SimulateFlags sim;
  auto* simulate = app.add_subcommand("simulate", "Generate tutor/learner dialogues into a run directory");
  simulate->add_option("--tutors", sim.tutors, "Comma-separated tutor kinds")
      ->envname("SOCRATIC_TUTORS")
      ->capture_default_str();
  simulate->add_option("--questions", sim.questions, "'all' or comma-separated question ids")
      ->envname("SOCRATIC_QUESTIONS")
      ->capture_default_str();
  simulate->add_option("--conversations", sim.conversations, "Conversations per tutor and question")
      ->envname("SOCRATIC_CONVERSATIONS")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  simulate->add_option("--turns", sim.turns, "Turns per conversation")
      ->envname("SOCRATIC_TURNS")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Base seed")->envname("SOCRATIC_SEED")->capture_default_str();
  simulate->add_option("--out", sim.out, "Run directory")->envname("SOCRATIC_SIMULATE_OUT")->capture_default_str();
  simulate->add_option("--run-id", sim.run_id, "Run id (defaults to the run directory name)")
      ->envname("SOCRATIC_RUN_ID");
  simulate->add_option("--bank", sim.bank, "Question bank JSON (defaults to the built-in bank)")
      ->envname("SOCRATIC_BANK");
  simulate->add_option("--templates", sim.templates, "JSON file overriding prompt templates")
      ->envname("SOCRATIC_TEMPLATES");
  simulate->add_option("--tutor-model", sim.tutor_model, "Model id sent for the tutor")
      ->envname("SOCRATIC_TUTOR_MODEL")
      ->capture_default_str();
  simulate->add_option("--learner-model", sim.learner_model, "Model id sent for the learner")
      ->envname("SOCRATIC_LEARNER_MODEL")
      ->capture_default_str();
  simulate->add_option("--temperature", sim.temperature, "Sampling temperature")
      ->envname("SOCRATIC_TEMPERATURE")
      ->check(CLI::Range(0.0, 2.0))
      ->capture_default_str();
  simulate->add_option("--top-p", sim.top_p, "Nucleus sampling mass")
      ->envname("SOCRATIC_TOP_P")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  simulate->add_option("--max-tokens", sim.max_tokens, "Completion length cap")
      ->envname("SOCRATIC_MAX_TOKENS")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  simulate->add_option("--max-consecutive-failures", sim.max_consecutive_failures,
                       "Stop a tutor/question cell after this many failed conversations in a row")
      ->envname("SOCRATIC_MAX_CONSECUTIVE_FAILURES")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  simulate->add_option("--timestamps", sim.timestamps, "Record wall-clock times (default: off with --mock)")
      ->envname("SOCRATIC_TIMESTAMPS");
  add_backend_flags(simulate, sim.backend, true, false, false);

  ScoreFlags sc;
  auto* score = app.add_subcommand("score", "Score every conversation of a run directory");
  score->add_option("run_dir", sc.run_dir, "Run directory written by simulate")->required();
  score->add_option("--out", sc.out, "Scores CSV (default: <run_dir>/scores.csv)")->envname("SOCRATIC_SCORE_OUT");
  score->add_option("--metrics", sc.metrics, "Comma-separated: bleu,rouge_l,meteor,bertscore,llm or all")
      ->envname("SOCRATIC_METRICS")
      ->capture_default_str();
  score->add_flag("--include-partials", sc.include_partials, "Also score completed turns of failed conversations")
      ->envname("SOCRATIC_INCLUDE_PARTIALS");
  score->add_option("--bank", sc.bank, "Question bank JSON")->envname("SOCRATIC_BANK");
  score->add_option("--judge-model", sc.judge_model, "Model id sent for the judge")
      ->envname("SOCRATIC_JUDGE_MODEL")
      ->capture_default_str();
  score->add_option("--meteor-beam", sc.meteor_beam, "METEOR alignment beam width")
      ->envname("SOCRATIC_METEOR_BEAM")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_backend_flags(score, sc.backend, true, true, true);

  ReportFlags rp;
  auto* report = app.add_subcommand("report", "Aggregate a scores CSV into tables, charts and t-tests");
  report->add_option("scores", rp.scores, "Scores CSV written by score");
  report->add_option("--means", rp.means, "JSON table of published means to lay out instead of a scores CSV")
      ->envname("SOCRATIC_MEANS");
  report->add_option("--out", rp.out, "Report directory (default: next to the scores CSV)")
      ->envname("SOCRATIC_REPORT_OUT");
  report->add_option("--unit", rp.unit, "t-test sampling unit: final-turn, all-turns or conversation-mean")
      ->envname("SOCRATIC_UNIT")
      ->capture_default_str();

  ServeFlags sv;
  auto* serve = app.add_subcommand("serve", "Run the live tutoring session server");
  serve->add_option("--host", sv.host, "Interface to bind")->envname("SOCRATIC_HOST")->capture_default_str();
  serve->add_option("--port", sv.port, "Port to listen on")
      ->envname("SOCRATIC_PORT")
      ->check(CLI::Range(0, 65535))
      ->capture_default_str();
  serve->add_option("--static-dir", sv.static_dir, "Web client assets served at /")->envname("SOCRATIC_STATIC_DIR");
  serve->add_option("--persist", sv.persist, "Append closed sessions to this JSONL file")
      ->envname("SOCRATIC_PERSIST");
  serve->add_flag("--live-score", sv.live_score, "Return an LLM critical-thinking score after every turn")
      ->envname("SOCRATIC_LIVE_SCORE");
  serve->add_option("--bank", sv.bank, "Question bank JSON")->envname("SOCRATIC_BANK");
  serve->add_option("--templates", sv.templates, "JSON file overriding prompt templates")
      ->envname("SOCRATIC_TEMPLATES");
  serve->add_option("--tutor-model", sv.tutor_model, "Model id sent for the tutor")
      ->envname("SOCRATIC_TUTOR_MODEL")
      ->capture_default_str();
  serve->add_option("--judge-model", sv.judge_model, "Model id sent for the judge")
      ->envname("SOCRATIC_JUDGE_MODEL")
      ->capture_default_str();
  add_backend_flags(serve, sv.backend, true, false, true);

  std::string bank_path;
  bool bank_json = false;
  auto* bank = app.add_subcommand("bank", "Inspect the question bank");
  bank->require_subcommand(1);
  auto* bank_list = bank->add_subcommand("list", "Print the questions");
  bank_list->add_option("--bank", bank_path, "Question bank JSON")->envname("SOCRATIC_BANK");
  bank_list->add_flag("--json", bank_json, "Print the bank as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (simulate->parsed()) return run_simulate(sim);
    if (score->parsed()) return run_score(sc);
    if (report->parsed()) return run_report(rp);
    if (serve->parsed()) return run_serve(sv);
    if (bank_list->parsed()) return run_bank_list(bank_path, bank_json);
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const BackendError& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return kBackend;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}

}  // namespace

int main(int argc, char** argv) { return main_impl(argc, argv); }
