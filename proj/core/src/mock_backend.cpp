#include "socratic/mock_backend.hpp"

#include <array>
#include <cmath>
#include <set>

#include "socratic/text.hpp"
#include "socratic/util.hpp"

namespace socratic {

namespace {

class Picker {
 public:
  explicit Picker(std::uint64_t seed) : state_(seed) {}

  template <std::size_t N>
  const char* pick(const std::array<const char*, N>& pool) {
    return pool[splitmix64(state_) % N];
  }
  std::uint64_t next() { return splitmix64(state_); }

 private:
  std::uint64_t state_;
};

// Text between `open` and `close` (or to the end when `close` is absent).
std::string between(std::string_view text, std::string_view open, std::string_view close) {
  auto start = text.find(open);
  if (start == std::string_view::npos) return {};
  start += open.size();
  auto end = close.empty() ? std::string_view::npos : text.find(close, start);
  return trim(text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
}

std::vector<std::string> content_words(std::string_view text) {
  static const std::set<std::string> kStop = {
      "about", "above", "after", "again", "always", "because", "being", "could", "does", "doing",
      "every", "from", "have", "into", "just", "more", "most", "much", "only", "other", "over", "really",
      "should", "some", "such", "than", "that", "their", "them", "then", "there", "these", "they", "this",
      "those", "through", "very", "what", "when", "where", "which", "while", "with", "would", "your"};
  std::vector<std::string> out;
  for (auto& tok : tokenize(text)) {
    if (tok.size() >= 4 && !kStop.contains(tok)) out.push_back(std::move(tok));
  }
  return out;
}

std::string phrase_from(std::string_view text, Picker& picker) {
  auto words = content_words(text);
  if (words.empty()) return "that";
  if (words.size() == 1) return words.front();
  const std::size_t i = picker.next() % (words.size() - 1);
  return words[i] + " " + words[i + 1];
}

constexpr std::array<const char*, 5> kSocraticForms = {
    "What do you mean by %?", "Why do you assume %?", "How did you know that % holds?",
    "If % is true, what is likely to happen as a result?", "What else should we consider about %?"};

constexpr std::array<const char*, 6> kBasicLines = {
    "That is one way to see %.", "Many people talk about % these days.", "Sure, % is a common topic.",
    "I suppose % could matter to some.", "Well, % is what it is.", "Interesting, % comes up often."};

constexpr std::array<const char*, 8> kNonsenseA = {"Velvet", "Orbiting", "Whistling", "Crystalline",
                                                   "Sleepy", "Bouncing", "Turquoise", "Wobbly"};
constexpr std::array<const char*, 8> kNonsenseB = {"teapots", "penguins", "marmalade", "zeppelins",
                                                   "cactuses", "trombones", "pebbles", "lanterns"};
constexpr std::array<const char*, 6> kNonsenseC = {"juggle the moon", "hum in triangles", "taste of Tuesday",
                                                   "dance backwards", "melt into jazz", "collect puddles"};

constexpr std::array<const char*, 6> kLearnerForms = {
    "I think % matters because it helps us check whether knowledge is reliable.",
    "% is important because other people can verify the evidence.",
    "Maybe % depends on different perspectives and personal experience.",
    "I believe % shows that knowledge needs evidence and clear reasoning.",
    "% can be helpful, but it is not always objective or complete.",
    "We should question % and look at the evidence before we decide."};

std::string fill(const char* form, const std::string& phrase) {
  std::string out(form);
  auto pos = out.find('%');
  if (pos != std::string::npos) out.replace(pos, 1, phrase);
  if (!out.empty() && out[0] >= 'a' && out[0] <= 'z') out[0] = static_cast<char>(out[0] - 'a' + 'A');
  return out;
}

std::string judge_reply(std::string_view prompt, Picker& picker) {
  const std::string answers = between(prompt, "The provided answers ", "\nPROVIDE THE ANSWER");
  std::set<std::string> distinct;
  for (auto& w : content_words(answers)) distinct.insert(w);
  int score = static_cast<int>(distinct.size() / 6) + static_cast<int>(picker.next() % 2);
  score = std::min(score, 5);
  return "{\"Score\": " + std::to_string(score) +
         "} The answers show a " + (score >= 3 ? "reasoned" : "limited") +
         " use of evidence and argument.";
}

}  // namespace

std::string MockChatBackend::complete(std::span<const ChatMessage> messages, const GenerationParams& params) {
  std::string prompt;
  for (const auto& m : messages) {
    prompt += m.content;
    prompt += '\n';
  }
  Picker picker(fnv1a64(prompt) ^ static_cast<std::uint64_t>(params.seed.value_or(0)));

  if (prompt.find("You are an AI evaluator") != std::string::npos) return judge_reply(prompt, picker);

  if (prompt.find("strict Socratic philosopher") != std::string::npos) {
    const std::string input = between(prompt, "the new student response:", " to ASK THE STUDENT");
    return fill(picker.pick(kSocraticForms), phrase_from(input, picker));
  }
  if (prompt.find("DO NOT HELP HIM") != std::string::npos) {
    const std::string input = between(prompt, "New human speech:", "ANSWER TO THE HUMAN");
    return fill(picker.pick(kBasicLines), phrase_from(input, picker));
  }
  if (prompt.find("random and meaningless") != std::string::npos) {
    return std::string(picker.pick(kNonsenseA)) + " " + picker.pick(kNonsenseB) + " " + picker.pick(kNonsenseC) +
           "?";
  }
  if (prompt.find("ANSWER to the question") != std::string::npos) {
    const std::string question = between(prompt, "ANSWER to the question", "IN ONE SENTENCE");
    return fill(picker.pick(kLearnerForms), phrase_from(question, picker));
  }
  if (prompt.find("Help me think about the question:") != std::string::npos) {
    const std::string question = between(prompt, "Help me think about the question:", "");
    return "Let us look at it step by step. When thinking about " + phrase_from(question, picker) +
           ", consider what counts as evidence and who gets to decide.";
  }
  return fill("I see what you mean about %.", phrase_from(prompt, picker));
}

TokenEmbeddings HashEmbedder::embed(std::string_view text) {
  TokenEmbeddings out;
  out.tokens = tokenize(text);
  out.vectors.reserve(out.tokens.size());
  for (const auto& tok : out.tokens) {
    std::uint64_t state = fnv1a64(tok);
    std::vector<double> v(dim_);
    v[0] = 1.0;
    for (std::size_t i = 1; i < dim_; ++i) {
      v[i] = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53 * 2.0 - 1.0;
    }
    out.vectors.push_back(std::move(v));
  }
  return out;
}

}  // namespace socratic
