#include "socratic/backend.hpp"

#include <algorithm>
#include <cmath>

#include "socratic/error.hpp"
#include "socratic/util.hpp"

namespace socratic {

using nlohmann::json;

std::string_view to_string(Role role) noexcept {
  switch (role) {
    case Role::kSystem:
      return "system";
    case Role::kUser:
      return "user";
    case Role::kAssistant:
      return "assistant";
  }
  return "user";
}

GenerationParams GenerationParams::dialogue() { return {}; }

GenerationParams GenerationParams::judge() {
  GenerationParams p;
  p.temperature = 0.0;
  p.max_tokens = 512;
  return p;
}

void GenerationParams::validate() const {
  if (!(temperature >= 0.0 && temperature <= 2.0))
    throw PreconditionError("temperature must be in [0, 2], got " + format_double(temperature));
  if (!(top_p > 0.0 && top_p <= 1.0))
    throw PreconditionError("top_p must be in (0, 1], got " + format_double(top_p));
  if (max_tokens < 1) throw PreconditionError("max_tokens must be >= 1");
  if (model.empty()) throw PreconditionError("model id must not be empty");
}

json to_json(const GenerationParams& p) {
  json j = {{"model", p.model}, {"temperature", p.temperature}, {"top_p", p.top_p},
            {"max_tokens", p.max_tokens}};
  if (p.seed) j["seed"] = *p.seed;
  return j;
}

GenerationParams params_from_json(const json& j) {
  GenerationParams p;
  p.model = j.value("model", p.model);
  p.temperature = j.value("temperature", p.temperature);
  p.top_p = j.value("top_p", p.top_p);
  p.max_tokens = j.value("max_tokens", p.max_tokens);
  if (j.contains("seed") && !j["seed"].is_null()) p.seed = j["seed"].get<std::int64_t>();
  return p;
}

void TokenEmbeddings::validate() const {
  if (tokens.empty()) throw BackendError(BackendError::Kind::kBadResponse, "embedding response has no tokens");
  if (tokens.size() != vectors.size())
    throw BackendError(BackendError::Kind::kBadResponse,
                       "embedding dimension mismatch: " + std::to_string(tokens.size()) + " tokens but " +
                           std::to_string(vectors.size()) + " vectors");
  const std::size_t d = vectors.front().size();
  if (d == 0) throw BackendError(BackendError::Kind::kBadResponse, "embedding vectors have dimension 0");
  for (const auto& v : vectors) {
    if (v.size() != d)
      throw BackendError(BackendError::Kind::kBadResponse, "embedding dimension mismatch between vectors");
    for (double x : v) {
      if (!std::isfinite(x))
        throw BackendError(BackendError::Kind::kBadResponse, "embedding contains NaN/Inf component");
    }
  }
}

std::string ChatBackend::chat_complete(std::span<const ChatMessage> messages, const GenerationParams& params) {
  if (messages.empty()) throw PreconditionError("chat_complete: message list is empty");
  for (const auto& m : messages) {
    if (m.role != Role::kSystem && trim_view(m.content).empty())
      throw PreconditionError("chat_complete: empty " + std::string(to_string(m.role)) + " message");
  }
  params.validate();
  std::string text = trim(complete(messages, params));
  if (text.empty()) throw BackendError(BackendError::Kind::kEmptyCompletion, "backend returned an empty completion");
  return text;
}

TokenEmbeddings Embedder::embed_tokens(std::string_view text) {
  if (trim_view(text).empty()) throw PreconditionError("embed_tokens: text is empty");
  TokenEmbeddings out = embed(text);
  out.validate();
  return out;
}

json chat_request_json(std::span<const ChatMessage> messages, const GenerationParams& params) {
  json msgs = json::array();
  for (const auto& m : messages) msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  json body = {{"model", params.model},
               {"messages", std::move(msgs)},
               {"temperature", params.temperature},
               {"top_p", params.top_p},
               {"max_tokens", params.max_tokens}};
  if (params.seed) body["seed"] = *params.seed;
  return body;
}

std::string chat_request_body(std::span<const ChatMessage> messages, const GenerationParams& params) {
  return chat_request_json(messages, params).dump();
}

std::string parse_chat_response(std::string_view body) {
  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded()) throw BackendError(BackendError::Kind::kBadResponse, "chat response is not JSON");
  if (!doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty())
    throw BackendError(BackendError::Kind::kBadResponse, "chat response has no choices");
  const json& first = doc["choices"][0];
  const json* content = nullptr;
  if (first.contains("message") && first["message"].contains("content")) {
    content = &first["message"]["content"];
  } else if (first.contains("text")) {
    content = &first["text"];
  }
  if (content == nullptr || content->is_null()) return {};
  if (!content->is_string())
    throw BackendError(BackendError::Kind::kBadResponse, "chat response content is not a string");
  return trim(content->get<std::string>());
}

std::string embed_request_body(std::string_view text) { return json{{"text", text}}.dump(); }

TokenEmbeddings parse_embed_response(std::string_view body) {
  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object())
    throw BackendError(BackendError::Kind::kBadResponse, "embed response is not a JSON object");
  if (!doc.contains("tokens") || !doc["tokens"].is_array() || !doc.contains("vectors") ||
      !doc["vectors"].is_array())
    throw BackendError(BackendError::Kind::kBadResponse, "embed response needs 'tokens' and 'vectors' arrays");
  TokenEmbeddings out;
  try {
    out.tokens = doc["tokens"].get<std::vector<std::string>>();
    out.vectors = doc["vectors"].get<std::vector<std::vector<double>>>();
  } catch (const json::exception& e) {
    throw BackendError(BackendError::Kind::kBadResponse, std::string("malformed embed response: ") + e.what());
  }
  out.validate();
  return out;
}

std::chrono::milliseconds RetryPolicy::backoff_for(int retry) const {
  if (retry < 1) return std::chrono::milliseconds(0);
  return base_backoff * (std::int64_t{1} << std::min(retry - 1, 20));
}

ConcurrencyLimiter::ConcurrencyLimiter(int slots)
    : slots_(slots), sem_(slots > 0 ? slots : throw PreconditionError("concurrency limit must be >= 1")) {}

std::string ThrottledChatBackend::complete(std::span<const ChatMessage> messages, const GenerationParams& params) {
  ConcurrencyLimiter::Slot slot(*limiter_);
  return inner_.chat_complete(messages, params);
}

TokenEmbeddings ThrottledEmbedder::embed(std::string_view text) {
  ConcurrencyLimiter::Slot slot(*limiter_);
  return inner_.embed_tokens(text);
}

}  // namespace socratic
