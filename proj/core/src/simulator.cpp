#include "socratic/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <memory>
#include <mutex>
#include <optional>
#include <fstream>
#include <sstream>
#include <thread>

#include "socratic/error.hpp"
#include "socratic/util.hpp"

namespace socratic {

using nlohmann::json;

ConversationRecord run_conversation(ChatBackend& tutor_backend, ChatBackend& learner_backend, TutorKind kind,
                                    const ToKItem& item, int turns, std::int64_t seed,
                                    const ConversationOptions& options) {
  if (turns < 1) throw PreconditionError("run_conversation: turns must be >= 1");

  ConversationRecord record;
  record.seed = seed;
  Transcript& t = record.transcript;
  t = Transcript::start(kind, item);
  t.meta.tutor_model = options.tutor_params.model;
  t.meta.learner_model = options.learner_params.model;
  t.meta.tutor_params = options.tutor_params;
  t.meta.tutor_params.seed = seed;
  t.meta.learner_params = options.learner_params;
  t.meta.learner_params.seed = seed;
  if (options.record_timestamps) t.meta.started_at = utc_timestamp();

  const TemplateSet& templates = options.templates ? *options.templates : TemplateSet::defaults();
  for (int index = 1; index <= turns; ++index) {
    TurnPrompts prompts;
    prompts.turn = index;
    try {
      // The audit entry needs the prompt even when the call fails.
      const int done = static_cast<int>(t.turns.size());
      prompts.tutor_prompt =
          render_tutor_prompt(kind, item, format_history(t, done), latest_student_text(t), templates).front().content;
      Utterance tutor = next_tutor_utterance(tutor_backend, kind, item, t, t.meta.tutor_params, templates);
      prompts.learner_prompt = render_learner_prompt(tutor.text, templates).front().content;
      Utterance learner = next_learner_utterance(learner_backend, tutor.text, t.meta.learner_params, templates);
      t.turns.push_back({index, std::move(tutor.text), std::move(learner.text)});
      record.prompts.push_back(std::move(prompts));
    } catch (const BackendError& e) {
      record.prompts.push_back(std::move(prompts));
      record.failed_at = index;
      record.error = e.what();
      break;
    }
  }
  if (options.record_timestamps) t.meta.finished_at = utc_timestamp();
  return record;
}

std::int64_t conversation_seed(std::int64_t base_seed, TutorKind kind, int question_id, int conversation_index) {
  const std::string key =
      std::string(to_string(kind)) + "|" + std::to_string(question_id) + "|" + std::to_string(conversation_index);
  return base_seed + static_cast<std::int64_t>(fnv1a64(key) & 0x7fffffffULL);
}

void ExperimentConfig::validate() const {
  if (tutor_kinds.empty()) throw PreconditionError("experiment needs at least one tutor kind");
  if (conversations_per_cell < 1) throw PreconditionError("conversations_per_cell must be >= 1");
  if (turns_per_conversation < 1) throw PreconditionError("turns_per_conversation must be >= 1");
  if (max_in_flight < 1) throw PreconditionError("max_in_flight must be >= 1");
  if (max_consecutive_failures < 1) throw PreconditionError("max_consecutive_failures must be >= 1");
  tutor_params.validate();
  learner_params.validate();
}

std::string ExperimentConfig::effective_run_id() const {
  if (!run_id.empty()) return run_id;
  auto name = output_dir.filename().string();
  if (name.empty()) name = output_dir.parent_path().filename().string();
  return name.empty() ? "run" : name;
}

std::string cell_file_name(TutorKind kind, int question_id) {
  return std::string(to_string(kind)) + "_q" + std::to_string(question_id) + ".jsonl";
}

int RunManifest::total_records() const {
  int n = 0;
  for (const auto& c : cells) n += c.records;
  return n;
}

int RunManifest::total_failed() const {
  int n = 0;
  for (const auto& c : cells) n += c.failed;
  return n;
}

int RunManifest::total_skipped() const {
  int n = 0;
  for (const auto& c : cells) n += c.skipped;
  return n;
}

json RunManifest::to_json() const {
  json cells_json = json::array();
  for (const auto& c : cells) {
    cells_json.push_back({{"tutor", to_string(c.kind)},
                          {"question_id", c.question_id},
                          {"file", c.file},
                          {"records", c.records},
                          {"failed", c.failed},
                          {"skipped", c.skipped},
                          {"aborted", c.aborted}});
  }
  return {{"run_id", run_id},
          {"config", config},
          {"cells", std::move(cells_json)},
          {"totals", {{"records", total_records()}, {"failed", total_failed()}, {"skipped", total_skipped()}}}};
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  try {
    m.run_id = j.at("run_id").get<std::string>();
    m.config = j.value("config", json::object());
    for (const auto& c : j.at("cells")) {
      CellSummary cell;
      cell.kind = tutor_kind_from_string(c.at("tutor").get<std::string>());
      cell.question_id = c.at("question_id").get<int>();
      cell.file = c.at("file").get<std::string>();
      cell.records = c.at("records").get<int>();
      cell.failed = c.at("failed").get<int>();
      cell.skipped = c.value("skipped", 0);
      cell.aborted = c.value("aborted", false);
      m.cells.push_back(std::move(cell));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed manifest: ") + e.what());
  } catch (const PreconditionError& e) {
    throw DataError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

RunManifest load_manifest(const std::filesystem::path& run_dir) {
  const auto path = run_dir / kManifestFile;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("no manifest at " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  json j = json::parse(buf.str(), nullptr, false);
  if (j.is_discarded()) throw DataError(path.string() + ": not valid JSON");
  return RunManifest::from_json(j);
}

namespace {

struct Task {
  std::size_t cell;
  int conversation_index;
};

struct CellState {
  TutorKind kind;
  const ToKItem* item;
  std::atomic<int> consecutive_failures{0};
  std::atomic<bool> aborted{false};
};

json config_json(const ExperimentConfig& c, const std::vector<int>& question_ids) {
  json kinds = json::array();
  for (auto k : c.tutor_kinds) kinds.push_back(to_string(k));
  return {{"tutors", std::move(kinds)},
          {"question_ids", question_ids},
          {"conversations_per_cell", c.conversations_per_cell},
          {"turns_per_conversation", c.turns_per_conversation},
          {"tutor_params", to_json(c.tutor_params)},
          {"learner_params", to_json(c.learner_params)},
          {"base_seed", c.base_seed},
          {"max_consecutive_failures", c.max_consecutive_failures}};
}

}  // namespace

RunManifest run_experiment(const ExperimentConfig& config, const QuestionBank& bank, ChatBackend& tutor_backend,
                           ChatBackend& learner_backend, const TemplateSet& templates) {
  config.validate();
  const std::vector<int> question_ids = config.question_ids.empty() ? bank.ids() : config.question_ids;

  std::vector<std::unique_ptr<CellState>> cells;
  for (TutorKind kind : config.tutor_kinds) {
    for (int qid : question_ids) {
      auto cell = std::make_unique<CellState>();
      cell->kind = kind;
      cell->item = &bank.get(qid);
      cells.push_back(std::move(cell));
    }
  }

  std::vector<Task> tasks;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (int i = 0; i < config.conversations_per_cell; ++i) tasks.push_back({c, i});
  }
  std::vector<std::optional<ConversationRecord>> results(tasks.size());

  ConversationOptions options;
  options.tutor_params = config.tutor_params;
  options.learner_params = config.learner_params;
  options.templates = &templates;
  options.record_timestamps = config.record_timestamps;

  std::atomic<std::size_t> next{0};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      CellState& cell = *cells[tasks[i].cell];
      if (cell.aborted.load()) continue;
      try {
        const int idx = tasks[i].conversation_index;
        ConversationRecord rec =
            run_conversation(tutor_backend, learner_backend, cell.kind, *cell.item, config.turns_per_conversation,
                             conversation_seed(config.base_seed, cell.kind, cell.item->id, idx), options);
        rec.conversation_index = idx;
        if (rec.failed()) {
          if (cell.consecutive_failures.fetch_add(1) + 1 >= config.max_consecutive_failures) cell.aborted = true;
        } else {
          cell.consecutive_failures = 0;
        }
        results[i] = std::move(rec);
      } catch (...) {
        std::lock_guard lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
        next = tasks.size();
        return;
      }
    }
  };
  {
    const std::size_t n_workers =
        std::min<std::size_t>(static_cast<std::size_t>(config.max_in_flight), std::max<std::size_t>(tasks.size(), 1));
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  if (fatal) std::rethrow_exception(fatal);

  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  if (ec) throw DataError("cannot create " + config.output_dir.string() + ": " + ec.message());

  RunManifest manifest;
  manifest.run_id = config.effective_run_id();
  manifest.config = config_json(config, question_ids);
  if (config.record_timestamps) manifest.config["created_at"] = utc_timestamp();

  std::size_t t = 0;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    CellSummary summary;
    summary.kind = cells[c]->kind;
    summary.question_id = cells[c]->item->id;
    summary.file = cell_file_name(summary.kind, summary.question_id);
    summary.aborted = cells[c]->aborted.load();

    const auto path = config.output_dir / summary.file;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    for (; t < tasks.size() && tasks[t].cell == c; ++t) {
      if (!results[t]) {
        ++summary.skipped;
        continue;
      }
      out << record_to_json(*results[t]).dump() << '\n';
      ++summary.records;
      if (results[t]->failed()) ++summary.failed;
    }
    if (!out) throw DataError("write failed for " + path.string());
    manifest.cells.push_back(std::move(summary));
  }

  const auto manifest_path = config.output_dir / kManifestFile;
  std::ofstream mout(manifest_path, std::ios::binary | std::ios::trunc);
  if (!mout) throw DataError("cannot write " + manifest_path.string());
  mout << manifest.to_json().dump(2) << '\n';
  return manifest;
}

}  // namespace socratic
