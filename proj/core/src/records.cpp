#include "socratic/records.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

#include "socratic/error.hpp"
#include "socratic/util.hpp"

namespace socratic {

using nlohmann::json;

namespace {

void require(bool cond, const std::string& what) {
  if (!cond) throw DataError("record: " + what);
}

bool is_int(const json& j, const char* key) { return j.contains(key) && j[key].is_number_integer(); }
bool is_str(const json& j, const char* key) { return j.contains(key) && j[key].is_string(); }

}  // namespace

json record_to_json(const ConversationRecord& r) {
  const Transcript& t = r.transcript;
  json turns = json::array();
  for (const Turn& turn : t.turns) {
    turns.push_back({{"index", turn.index}, {"tutor_text", turn.tutor_text}, {"learner_text", turn.learner_text}});
  }
  json prompts = json::array();
  for (const TurnPrompts& p : r.prompts) {
    json entry = {{"turn", p.turn}, {"tutor_prompt", p.tutor_prompt}};
    entry["learner_prompt"] = p.learner_prompt ? json(*p.learner_prompt) : json(nullptr);
    prompts.push_back(std::move(entry));
  }
  json meta = r.extra_meta.is_object() ? r.extra_meta : json::object();
  meta["tutor_model"] = t.meta.tutor_model;
  meta["learner_model"] = t.meta.learner_model;
  meta["tutor_params"] = to_json(t.meta.tutor_params);
  meta["learner_params"] = to_json(t.meta.learner_params);
  meta["prompts"] = std::move(prompts);
  if (!r.error.empty()) meta["error"] = r.error;
  if (t.meta.started_at) meta["started_at"] = *t.meta.started_at;
  if (t.meta.finished_at) meta["finished_at"] = *t.meta.finished_at;

  return {{"tutor", to_string(t.tutor_kind)},
          {"question_id", t.question_id},
          {"conversation_index", r.conversation_index},
          {"seed", r.seed},
          {"opener", t.opener},
          {"turns", std::move(turns)},
          {"failed_at", r.failed_at ? json(*r.failed_at) : json(nullptr)},
          {"meta", std::move(meta)}};
}

void validate_record_json(const json& j) {
  require(j.is_object(), "not a JSON object");
  require(is_str(j, "tutor"), "missing string 'tutor'");
  require(parse_tutor_kind(j["tutor"].get<std::string>()).has_value(),
          "unknown tutor '" + j["tutor"].get<std::string>() + "'");
  require(is_int(j, "question_id"), "missing integer 'question_id'");
  require(is_int(j, "conversation_index"), "missing integer 'conversation_index'");
  require(is_int(j, "seed"), "missing integer 'seed'");
  require(is_str(j, "opener"), "missing string 'opener'");
  require(j["opener"].get<std::string>().starts_with(kOpenerPrefix), "opener is not the scripted request");
  require(j.contains("turns") && j["turns"].is_array(), "missing array 'turns'");
  require(j.contains("failed_at") && (j["failed_at"].is_null() || j["failed_at"].is_number_integer()),
          "'failed_at' must be an integer or null");
  require(j.contains("meta") && j["meta"].is_object(), "missing object 'meta'");

  int expected = 1;
  for (const auto& turn : j["turns"]) {
    require(turn.is_object(), "turn is not an object");
    require(is_int(turn, "index") && turn["index"].get<int>() == expected,
            "turn indices must run 1..n without gaps");
    require(is_str(turn, "tutor_text") && !trim_view(turn["tutor_text"].get<std::string>()).empty(),
            "turn " + std::to_string(expected) + " has no tutor_text");
    require(is_str(turn, "learner_text") && !trim_view(turn["learner_text"].get<std::string>()).empty(),
            "turn " + std::to_string(expected) + " has no learner_text");
    ++expected;
  }
  if (!j["failed_at"].is_null()) {
    require(j["failed_at"].get<int>() == static_cast<int>(j["turns"].size()) + 1,
            "failed_at must follow the last complete turn");
  }
  const json& meta = j["meta"];
  if (meta.contains("prompts")) {
    require(meta["prompts"].is_array(), "meta.prompts must be an array");
    for (const auto& p : meta["prompts"]) {
      require(p.is_object() && is_int(p, "turn") && is_str(p, "tutor_prompt"), "malformed meta.prompts entry");
    }
  }
}

ConversationRecord record_from_json(const json& j) {
  validate_record_json(j);
  ConversationRecord r;
  Transcript& t = r.transcript;
  t.tutor_kind = tutor_kind_from_string(j["tutor"].get<std::string>());
  t.question_id = j["question_id"].get<int>();
  t.opener = j["opener"].get<std::string>();
  for (const auto& turn : j["turns"]) {
    t.turns.push_back({turn["index"].get<int>(), turn["tutor_text"].get<std::string>(),
                       turn["learner_text"].get<std::string>()});
  }
  r.conversation_index = j["conversation_index"].get<int>();
  r.seed = j["seed"].get<std::int64_t>();
  if (!j["failed_at"].is_null()) r.failed_at = j["failed_at"].get<int>();

  json meta = j["meta"];
  t.meta.tutor_model = meta.value("tutor_model", "");
  t.meta.learner_model = meta.value("learner_model", "");
  if (meta.contains("tutor_params")) t.meta.tutor_params = params_from_json(meta["tutor_params"]);
  if (meta.contains("learner_params")) t.meta.learner_params = params_from_json(meta["learner_params"]);
  if (meta.contains("started_at")) t.meta.started_at = meta["started_at"].get<std::string>();
  if (meta.contains("finished_at")) t.meta.finished_at = meta["finished_at"].get<std::string>();
  r.error = meta.value("error", "");
  if (meta.contains("prompts")) {
    for (const auto& p : meta["prompts"]) {
      TurnPrompts tp;
      tp.turn = p["turn"].get<int>();
      tp.tutor_prompt = p["tutor_prompt"].get<std::string>();
      if (p.contains("learner_prompt") && p["learner_prompt"].is_string())
        tp.learner_prompt = p["learner_prompt"].get<std::string>();
      r.prompts.push_back(std::move(tp));
    }
  }
  for (const char* key : {"tutor_model", "learner_model", "tutor_params", "learner_params", "prompts", "error",
                          "started_at", "finished_at"}) {
    meta.erase(key);
  }
  r.extra_meta = std::move(meta);
  return r;
}

std::vector<ConversationRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<ConversationRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim_view(line).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw DataError(where + ": not valid JSON");
    try {
      out.push_back(record_from_json(j));
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
  }
  return out;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace socratic
