#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace socratic {

enum class Role { kSystem, kUser, kAssistant };

std::string_view to_string(Role role) noexcept;

struct ChatMessage {
  Role role = Role::kUser;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

inline ChatMessage user_message(std::string content) { return {Role::kUser, std::move(content)}; }

struct GenerationParams {
  std::string model = "default";
  double temperature = 0.7;
  double top_p = 0.95;
  int max_tokens = 256;
  std::optional<std::int64_t> seed;

  /// Tutor and learner sampling defaults.
  static GenerationParams dialogue();
  /// Near-deterministic settings for the LLM judge.
  static GenerationParams judge();

  /// Throws PreconditionError when a field is out of range.
  void validate() const;

  bool operator==(const GenerationParams&) const = default;
};

nlohmann::json to_json(const GenerationParams& params);
GenerationParams params_from_json(const nlohmann::json& j);

/// Per-token contextual vectors for one text.
struct TokenEmbeddings {
  std::vector<std::string> tokens;
  std::vector<std::vector<double>> vectors;

  std::size_t dim() const noexcept { return vectors.empty() ? 0 : vectors.front().size(); }
  /// Throws BackendError(kBadResponse) on count/dimension mismatch,
  /// empty token lists or non-finite components.
  void validate() const;
};

/// Any chat-completion model. The public entry point checks the contract
/// on both sides of the call; implementations only override `complete`.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;

  /// Returns the trimmed assistant text. Throws PreconditionError for an
  /// empty message list or invalid params and BackendError when the model
  /// fails or answers with nothing.
  std::string chat_complete(std::span<const ChatMessage> messages, const GenerationParams& params);

 protected:
  virtual std::string complete(std::span<const ChatMessage> messages,
                               const GenerationParams& params) = 0;
};

/// Any token-embedding provider.
class Embedder {
 public:
  virtual ~Embedder() = default;

  TokenEmbeddings embed_tokens(std::string_view text);

 protected:
  virtual TokenEmbeddings embed(std::string_view text) = 0;
};

// Wire contract helpers, exposed for golden tests and fakes.
nlohmann::json chat_request_json(std::span<const ChatMessage> messages, const GenerationParams& params);
std::string chat_request_body(std::span<const ChatMessage> messages, const GenerationParams& params);
/// First choice's message content, trimmed.
std::string parse_chat_response(std::string_view body);
std::string embed_request_body(std::string_view text);
TokenEmbeddings parse_embed_response(std::string_view body);

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds base_backoff{1000};

  /// Delay before retry number `retry` (1-based): base * 2^(retry-1).
  std::chrono::milliseconds backoff_for(int retry) const;
};

/// Caps the number of backend calls in flight across every wrapped backend
/// sharing the same limiter.
class ConcurrencyLimiter {
 public:
  explicit ConcurrencyLimiter(int slots);

  class Slot {
   public:
    explicit Slot(ConcurrencyLimiter& owner) : owner_(owner) { owner_.sem_.acquire(); }
    ~Slot() { owner_.sem_.release(); }
    Slot(const Slot&) = delete;
    Slot& operator=(const Slot&) = delete;

   private:
    ConcurrencyLimiter& owner_;
  };

  int slots() const noexcept { return slots_; }

 private:
  int slots_;
  std::counting_semaphore<> sem_;
};

class ThrottledChatBackend final : public ChatBackend {
 public:
  ThrottledChatBackend(ChatBackend& inner, std::shared_ptr<ConcurrencyLimiter> limiter)
      : inner_(inner), limiter_(std::move(limiter)) {}

 protected:
  std::string complete(std::span<const ChatMessage> messages, const GenerationParams& params) override;

 private:
  ChatBackend& inner_;
  std::shared_ptr<ConcurrencyLimiter> limiter_;
};

class ThrottledEmbedder final : public Embedder {
 public:
  ThrottledEmbedder(Embedder& inner, std::shared_ptr<ConcurrencyLimiter> limiter)
      : inner_(inner), limiter_(std::move(limiter)) {}

 protected:
  TokenEmbeddings embed(std::string_view text) override;

 private:
  Embedder& inner_;
  std::shared_ptr<ConcurrencyLimiter> limiter_;
};

}  // namespace socratic
