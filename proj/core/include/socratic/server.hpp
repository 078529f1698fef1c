#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>

#include "socratic/agents.hpp"
#include "socratic/backend.hpp"
#include "socratic/corpus.hpp"

namespace socratic {

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8731;  // 0 picks a free port
  /// Served at "/". Without one a small placeholder page is served.
  std::filesystem::path static_dir;
  /// Closed sessions are appended here as JSONL records when set.
  std::filesystem::path persist_path;
  /// Score the learner's cumulative text with the judge after every turn.
  bool live_scoring = false;
  std::chrono::seconds session_ttl{24 * 60 * 60};
  /// Sent as Retry-After when a backend call fails.
  int retry_after_s = 5;
  GenerationParams tutor_params = GenerationParams::dialogue();
  GenerationParams judge_params = GenerationParams::judge();
  int judge_attempts = 3;
  /// Time source for session expiry; tests substitute their own.
  std::function<std::chrono::system_clock::time_point()> clock = [] { return std::chrono::system_clock::now(); };
};

/// HTTP service where a human plays the learner against a tutor kind.
///
///   POST   /api/sessions                {tutor, question_id}
///   POST   /api/sessions/{id}/messages  {text}
///   GET    /api/sessions/{id}           record JSON (simulator schema)
///   DELETE /api/sessions/{id}           close, persist, return the record
///   GET    /api/questions, GET /healthz
///
/// Sessions live in memory. Requests for one session are serialized: a
/// message posted while another is still being answered gets 409.
class SessionServer {
 public:
  /// `judge` may be null when live scoring is off. The bank, backends and
  /// templates must outlive the server.
  SessionServer(const QuestionBank& bank, ChatBackend& tutor_backend, ChatBackend* judge, ServerConfig config,
                const TemplateSet& templates = TemplateSet::defaults());
  ~SessionServer();

  SessionServer(const SessionServer&) = delete;
  SessionServer& operator=(const SessionServer&) = delete;

  /// Binds the configured host and port and returns the bound port.
  /// Throws Error when the port is unavailable.
  int bind();
  /// Serves until stop(). Calls bind() first if needed.
  void listen();
  /// Binds and serves on a background thread; returns the port.
  int start();
  void stop();

  int port() const noexcept;
  std::size_t session_count() const;
  /// Drops sessions idle for longer than the TTL; returns how many.
  std::size_t purge_expired();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace socratic
