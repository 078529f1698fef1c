#include "socratic/server.hpp"

#include <httplib.h>

#include <array>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <thread>

#include <nlohmann/json.hpp>

#include "socratic/error.hpp"
#include "socratic/judge.hpp"
#include "socratic/metrics.hpp"
#include "socratic/records.hpp"
#include "socratic/util.hpp"

namespace socratic {

using nlohmann::json;

namespace {

constexpr const char* kPlaceholderPage =
    "<!doctype html>\n<html><head><meta charset=\"utf-8\"><title>socratic</title></head>\n"
    "<body><h1>socratic</h1><p>The session API is running. Start the server with --static-dir to serve the "
    "web client.</p></body></html>\n";

std::string new_session_id() {
  static std::mutex m;
  static std::random_device rd;
  std::lock_guard lock(m);
  std::array<std::uint32_t, 4> words{};
  for (auto& w : words) w = rd();
  static constexpr char kHex[] = "0123456789abcdef";
  std::string id;
  for (std::uint32_t w : words) {
    for (int shift = 28; shift >= 0; shift -= 4) id += kHex[(w >> shift) & 0xF];
  }
  return id;
}

bool is_local_origin(const std::string& origin) {
  for (const char* prefix : {"http://localhost", "http://127.0.0.1", "http://[::1]", "https://localhost",
                             "https://127.0.0.1"}) {
    const std::string p(prefix);
    if (origin == p || origin.starts_with(p + ":")) return true;
  }
  return false;
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

}  // namespace

struct Session {
  std::string id;
  const ToKItem* item = nullptr;
  ConversationRecord record;
  std::string created_at;
  std::chrono::system_clock::time_point last_active;
  std::optional<std::string> pending_tutor_text;  // asked, not yet answered
  std::optional<double> last_llm_score;
  int scored_turn = 0;

  std::mutex turn_mutex;  // held for a whole message exchange
  std::mutex data_mutex;  // guards the fields above
};

struct SessionServer::Impl {
  const QuestionBank& bank;
  ChatBackend& tutor_backend;
  ChatBackend* judge;
  ServerConfig config;
  const TemplateSet& templates;

  httplib::Server http;
  std::thread worker;
  int bound_port = -1;

  mutable std::mutex store_mutex;
  std::map<std::string, std::shared_ptr<Session>> sessions;
  std::mutex persist_mutex;

  Impl(const QuestionBank& b, ChatBackend& t, ChatBackend* j, ServerConfig c, const TemplateSet& tm)
      : bank(b), tutor_backend(t), judge(j), config(std::move(c)), templates(tm) {
    if (config.live_scoring && judge == nullptr) throw PreconditionError("live scoring needs a judge backend");
    routes();
  }

  std::shared_ptr<Session> find(const std::string& id) {
    std::lock_guard lock(store_mutex);
    auto it = sessions.find(id);
    return it == sessions.end() ? nullptr : it->second;
  }

  std::size_t purge() {
    const auto now = config.clock();
    std::lock_guard lock(store_mutex);
    std::size_t n = 0;
    for (auto it = sessions.begin(); it != sessions.end();) {
      std::unique_lock data(it->second->data_mutex);
      if (now - it->second->last_active > config.session_ttl) {
        data.unlock();
        it = sessions.erase(it);
        ++n;
      } else {
        ++it;
      }
    }
    return n;
  }

  json session_json(Session& s) {
    json j = record_to_json(s.record);
    json& meta = j["meta"];
    meta["session_id"] = s.id;
    meta["created_at"] = s.created_at;
    meta["pending_tutor_text"] = s.pending_tutor_text ? json(*s.pending_tutor_text) : json(nullptr);
    meta["last_llm_score"] = s.last_llm_score ? json(*s.last_llm_score) : json(nullptr);
    return j;
  }

  void backend_failure(httplib::Response& res, const std::exception& e) {
    res.set_header("Retry-After", std::to_string(config.retry_after_s));
    send_json(res, 502, {{"error", e.what()}, {"retry_after_s", config.retry_after_s}});
  }

  void create_session(const httplib::Request& req, httplib::Response& res) {
    const json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) return send_error(res, 400, "body must be a JSON object");
    if (!body.contains("tutor") || !body["tutor"].is_string()) return send_error(res, 400, "missing string 'tutor'");
    const auto kind = parse_tutor_kind(body["tutor"].get<std::string>());
    if (!kind) return send_error(res, 400, "unknown tutor '" + body["tutor"].get<std::string>() + "'");
    if (!body.contains("question_id") || !body["question_id"].is_number_integer())
      return send_error(res, 400, "missing integer 'question_id'");
    const ToKItem* item = bank.find(body["question_id"].get<int>());
    if (item == nullptr) return send_error(res, 400, "unknown question_id " + body["question_id"].dump());

    purge();
    auto s = std::make_shared<Session>();
    s->id = new_session_id();
    s->item = item;
    s->created_at = utc_timestamp();
    s->last_active = config.clock();
    Transcript& t = s->record.transcript;
    t = Transcript::start(*kind, *item);
    t.meta.tutor_model = config.tutor_params.model;
    t.meta.learner_model = "human";
    t.meta.tutor_params = config.tutor_params;
    t.meta.started_at = s->created_at;

    try {
      Utterance first = next_tutor_utterance(tutor_backend, *kind, *item, t, config.tutor_params, templates);
      s->record.prompts.push_back({1, first.prompt, std::nullopt});
      s->pending_tutor_text = first.text;
    } catch (const BackendError& e) {
      return backend_failure(res, e);
    }
    {
      std::lock_guard lock(store_mutex);
      sessions.emplace(s->id, s);
    }
    send_json(res, 201,
              {{"session_id", s->id},
               {"tutor", to_string(*kind)},
               {"question_id", item->id},
               {"question", item->question},
               {"first_tutor_message", *s->pending_tutor_text}});
  }

  void post_message(const httplib::Request& req, httplib::Response& res) {
    auto s = find(req.path_params.at("id"));
    if (!s) return send_error(res, 404, "unknown session");
    std::unique_lock turn(s->turn_mutex, std::try_to_lock);
    if (!turn.owns_lock()) return send_error(res, 409, "the previous message is still being answered");

    const json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object() || !body.contains("text") || !body["text"].is_string())
      return send_error(res, 400, "body must be {\"text\": string}");
    const std::string text = trim(body["text"].get<std::string>());
    if (text.empty()) return send_error(res, 400, "message text is empty");

    Transcript draft;
    std::string tutor_text;
    {
      std::lock_guard data(s->data_mutex);
      if (!s->pending_tutor_text) return send_error(res, 409, "it is not the learner's turn");
      tutor_text = *s->pending_tutor_text;
      draft = s->record.transcript;
      s->last_active = config.clock();
    }
    const int index = static_cast<int>(draft.turns.size()) + 1;
    draft.turns.push_back({index, tutor_text, text});

    Utterance reply;
    try {
      reply = next_tutor_utterance(tutor_backend, draft.tutor_kind, *s->item, draft, config.tutor_params, templates);
    } catch (const BackendError& e) {
      // Nothing was committed, so the learner can resend the same message.
      return backend_failure(res, e);
    }

    std::optional<double> score;
    std::string score_note;
    if (config.live_scoring) {
      try {
        const LlmScore ls = llm_score(s->item->question, cumulative_learner_text(draft, index), *judge,
                                      config.judge_params, config.judge_attempts);
        score = ls.value;
        if (!ls.value) score_note = ls.missing_reason;
      } catch (const Error& e) {
        score_note = e.what();
      }
    }

    {
      std::lock_guard data(s->data_mutex);
      s->record.transcript = std::move(draft);
      s->record.prompts.push_back({index + 1, reply.prompt, std::nullopt});
      s->pending_tutor_text = reply.text;
      s->last_active = config.clock();
      if (config.live_scoring && s->scored_turn < index) {
        s->scored_turn = index;
        if (score) s->last_llm_score = score;
      }
    }
    json out = {{"tutor_reply", reply.text}, {"turn_index", index}};
    if (score) out["llm_score"] = *score;
    if (!score_note.empty()) out["llm_score_missing"] = score_note;
    send_json(res, 200, out);
  }

  void get_session(const httplib::Request& req, httplib::Response& res) {
    auto s = find(req.path_params.at("id"));
    if (!s) return send_error(res, 404, "unknown session");
    std::lock_guard data(s->data_mutex);
    send_json(res, 200, session_json(*s));
  }

  void close_session(const httplib::Request& req, httplib::Response& res) {
    auto s = find(req.path_params.at("id"));
    if (!s) return send_error(res, 404, "unknown session");
    std::unique_lock turn(s->turn_mutex, std::try_to_lock);
    if (!turn.owns_lock()) return send_error(res, 409, "a message is still being answered");
    json record;
    {
      std::lock_guard data(s->data_mutex);
      s->record.transcript.meta.finished_at = utc_timestamp();
      record = session_json(*s);
    }
    {
      std::lock_guard lock(store_mutex);
      sessions.erase(s->id);
    }
    if (!config.persist_path.empty()) {
      std::lock_guard lock(persist_mutex);
      std::ofstream out(config.persist_path, std::ios::binary | std::ios::app);
      out << record.dump() << '\n';
      if (!out) return send_error(res, 500, "cannot persist session to " + config.persist_path.string());
    }
    send_json(res, 200, record);
  }

  void routes() {
    http.set_post_routing_handler([](const httplib::Request& req, httplib::Response& res) {
      const std::string origin = req.get_header_value("Origin");
      if (!origin.empty() && is_local_origin(origin)) {
        res.set_header("Access-Control-Allow-Origin", origin);
        res.set_header("Vary", "Origin");
      }
    });
    http.Options(R"(/api/.*)", [](const httplib::Request& req, httplib::Response& res) {
      const std::string origin = req.get_header_value("Origin");
      if (!origin.empty() && is_local_origin(origin)) {
        res.set_header("Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.set_header("Access-Control-Max-Age", "600");
      }
      res.status = 204;
    });

    http.Get("/healthz", [](const httplib::Request&, httplib::Response& res) { res.set_content("ok", "text/plain"); });
    http.Get("/api/questions", [this](const httplib::Request&, httplib::Response& res) {
      json items = json::array();
      for (int id : bank.ids()) items.push_back({{"id", id}, {"question", bank.get(id).question}});
      send_json(res, 200, items);
    });
    http.Post("/api/sessions", [this](const httplib::Request& req, httplib::Response& res) { create_session(req, res); });
    http.Post("/api/sessions/:id/messages",
              [this](const httplib::Request& req, httplib::Response& res) { post_message(req, res); });
    http.Get("/api/sessions/:id", [this](const httplib::Request& req, httplib::Response& res) { get_session(req, res); });
    http.Delete("/api/sessions/:id",
                [this](const httplib::Request& req, httplib::Response& res) { close_session(req, res); });

    if (config.static_dir.empty()) {
      http.Get("/", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(kPlaceholderPage, "text/html; charset=utf-8");
      });
    } else if (!http.set_mount_point("/", config.static_dir.string())) {
      throw PreconditionError("static directory " + config.static_dir.string() + " does not exist");
    }

    http.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        send_error(res, 500, e.what());
      } catch (...) {
        send_error(res, 500, "internal error");
      }
    });
  }
};

SessionServer::SessionServer(const QuestionBank& bank, ChatBackend& tutor_backend, ChatBackend* judge,
                             ServerConfig config, const TemplateSet& templates)
    : impl_(std::make_unique<Impl>(bank, tutor_backend, judge, std::move(config), templates)) {}

SessionServer::~SessionServer() { stop(); }

int SessionServer::bind() {
  if (impl_->bound_port >= 0) return impl_->bound_port;
  const auto& c = impl_->config;
  if (c.port == 0) {
    impl_->bound_port = impl_->http.bind_to_any_port(c.host);
  } else if (impl_->http.bind_to_port(c.host, c.port)) {
    impl_->bound_port = c.port;
  }
  if (impl_->bound_port < 0) throw Error("cannot bind " + c.host + ":" + std::to_string(c.port));
  return impl_->bound_port;
}

void SessionServer::listen() {
  bind();
  impl_->http.listen_after_bind();
}

int SessionServer::start() {
  const int p = bind();
  impl_->worker = std::thread([this] { impl_->http.listen_after_bind(); });
  impl_->http.wait_until_ready();
  return p;
}

void SessionServer::stop() {
  impl_->http.stop();
  if (impl_->worker.joinable()) impl_->worker.join();
}

int SessionServer::port() const noexcept { return impl_->bound_port; }

std::size_t SessionServer::session_count() const {
  std::lock_guard lock(impl_->store_mutex);
  return impl_->sessions.size();
}

std::size_t SessionServer::purge_expired() { return impl_->purge(); }

}  // namespace socratic
