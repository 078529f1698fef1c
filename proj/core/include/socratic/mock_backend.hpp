#pragma once

#include "socratic/backend.hpp"

namespace socratic {

/// Offline stand-in for a chat model. Replies are a pure function of the
/// prompt text and the request seed, and their shape depends on which
/// prompt family the request carries (tutor kinds, learner, judge), so the
/// whole pipeline can run without a model server.
class MockChatBackend final : public ChatBackend {
 protected:
  std::string complete(std::span<const ChatMessage> messages, const GenerationParams& params) override;
};

/// Deterministic bag-of-tokens embedder: every distinct token maps to a
/// fixed pseudo-random unit-ish vector with a shared positive component,
/// so identical texts embed identically and related texts overlap.
class HashEmbedder final : public Embedder {
 public:
  explicit HashEmbedder(std::size_t dim = 32) : dim_(dim) {}

 protected:
  TokenEmbeddings embed(std::string_view text) override;

 private:
  std::size_t dim_;
};

}  // namespace socratic
