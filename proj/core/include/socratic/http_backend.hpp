#pragma once

#include <chrono>
#include <string>

#include "socratic/backend.hpp"

namespace socratic {

/// Where and how to reach one HTTP backend.
struct EndpointConfig {
  std::string base_url;  // e.g. http://127.0.0.1:8080 (an optional path prefix is kept)
  std::string api_key;   // sent as a bearer token when non-empty
  std::chrono::seconds connect_timeout{10};
  std::chrono::seconds read_timeout{300};
  RetryPolicy retry;

  /// Reads `url_var` and SOCRATIC_API_KEY. Throws PreconditionError when
  /// the URL variable is unset.
  static EndpointConfig from_env(const char* url_var);
};

inline constexpr const char* kChatUrlEnv = "SOCRATIC_CHAT_URL";
inline constexpr const char* kEmbedUrlEnv = "SOCRATIC_EMBED_URL";
inline constexpr const char* kApiKeyEnv = "SOCRATIC_API_KEY";

/// OpenAI-compatible POST {base}/v1/chat/completions client. Stateless
/// between calls, so one instance can be shared by any number of threads.
class HttpChatClient final : public ChatBackend {
 public:
  explicit HttpChatClient(EndpointConfig config);

 protected:
  std::string complete(std::span<const ChatMessage> messages, const GenerationParams& params) override;

 private:
  EndpointConfig config_;
};

/// POST {base}/embed client: {"text"} -> {"tokens", "vectors"}.
class HttpEmbedClient final : public Embedder {
 public:
  explicit HttpEmbedClient(EndpointConfig config);

 protected:
  TokenEmbeddings embed(std::string_view text) override;

 private:
  EndpointConfig config_;
};

}  // namespace socratic
