#include "socratic/http_backend.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "socratic/error.hpp"
#include "socratic/util.hpp"

namespace socratic {

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path prefix without trailing slash
};

ParsedUrl parse_base_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw PreconditionError("backend URL needs a scheme: " + url);
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw PreconditionError("unsupported URL scheme: " + url);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (scheme == "https") throw PreconditionError("https backends need a build with SOCRATIC_ENABLE_TLS=ON");
#endif
  auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl out;
  out.origin = url.substr(0, path_start);
  if (path_start != std::string::npos) {
    out.prefix = url.substr(path_start);
    while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  }
  return out;
}

bool transient_status(int status) { return status >= 500 || status == 408 || status == 429; }

// Posts JSON with the retry policy applied to transport errors and
// transient statuses. Returns the body of the first 2xx response.
std::string post_json(const EndpointConfig& cfg, const std::string& path, const std::string& body) {
  const ParsedUrl url = parse_base_url(cfg.base_url);
  const int attempts = 1 + std::max(0, cfg.retry.max_retries);
  std::string last_error;
  int last_status = 0;

  for (int attempt = 1; attempt <= attempts; ++attempt) {
    if (attempt > 1) std::this_thread::sleep_for(cfg.retry.backoff_for(attempt - 1));

    httplib::Client client(url.origin);
    client.set_connection_timeout(cfg.connect_timeout);
    client.set_read_timeout(cfg.read_timeout);
    client.set_write_timeout(cfg.read_timeout);
    httplib::Headers headers;
    if (!cfg.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg.api_key);

    auto res = client.Post(url.prefix + path, headers, body, "application/json");
    if (!res) {
      last_status = 0;
      last_error = "network error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 200 && res->status < 300) return res->body;
    last_status = res->status;
    last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
    if (!transient_status(res->status)) {
      throw BackendError(BackendError::Kind::kHttpStatus, cfg.base_url + path + " " + last_error, attempt,
                         res->status);
    }
  }
  const auto kind = last_status == 0 ? BackendError::Kind::kNetwork : BackendError::Kind::kHttpStatus;
  throw BackendError(kind,
                     cfg.base_url + path + " failed after " + std::to_string(attempts) + " attempts: " + last_error,
                     attempts, last_status);
}

}  // namespace

EndpointConfig EndpointConfig::from_env(const char* url_var) {
  EndpointConfig cfg;
  const char* url = std::getenv(url_var);
  if (url == nullptr || *url == '\0') throw PreconditionError(std::string(url_var) + " is not set");
  cfg.base_url = url;
  if (const char* key = std::getenv(kApiKeyEnv)) cfg.api_key = key;
  return cfg;
}

HttpChatClient::HttpChatClient(EndpointConfig config) : config_(std::move(config)) {
  parse_base_url(config_.base_url);
}

std::string HttpChatClient::complete(std::span<const ChatMessage> messages, const GenerationParams& params) {
  return parse_chat_response(post_json(config_, "/v1/chat/completions", chat_request_body(messages, params)));
}

HttpEmbedClient::HttpEmbedClient(EndpointConfig config) : config_(std::move(config)) {
  parse_base_url(config_.base_url);
}

TokenEmbeddings HttpEmbedClient::embed(std::string_view text) {
  return parse_embed_response(post_json(config_, "/embed", embed_request_body(text)));
}

}  // namespace socratic
