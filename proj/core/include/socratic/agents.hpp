#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "socratic/backend.hpp"
#include "socratic/corpus.hpp"

namespace socratic {

enum class TutorKind { kSocratic, kBasic, kRandom, kBaseline };

inline constexpr std::array<TutorKind, 4> kAllTutorKinds = {TutorKind::kSocratic, TutorKind::kBasic,
                                                            TutorKind::kRandom, TutorKind::kBaseline};

/// "socratic", "basic", "random", "baseline".
std::string_view to_string(TutorKind kind) noexcept;
/// Case-insensitive inverse of to_string.
std::optional<TutorKind> parse_tutor_kind(std::string_view name) noexcept;
/// Throws PreconditionError for unknown names.
TutorKind tutor_kind_from_string(std::string_view name);

// Prompt texts. Placeholders are {tok_question}, {history} and {input}.
inline constexpr std::string_view kSocraticTemplate =
    "You are a strict Socratic philosopher. Your goal is to help the student think about the question: "
    "{tok_question} Use ONLY information of the dialogue history: {history} and the new student response: "
    "{input} to ASK THE STUDENT ONE SHORT Socratic question that triggers the reflection and logically "
    "follow the conversation.";
inline constexpr std::string_view kBasicTemplate =
    "Dialogue history: {history} New human speech: {input} ANSWER TO THE HUMAN BUT DO NOT HELP HIM. ONE "
    "SHORT SENTENCE. DO NOT REPEAT YOURSELF";
inline constexpr std::string_view kRandomTemplate =
    "You are having a conversation with a human. New human response: {input}{history} Just generate a VERY "
    "SHORT random and meaningless text";
inline constexpr std::string_view kBaselineTemplate = "Help me think about the question: {tok_question}";
inline constexpr std::string_view kLearnerTemplate =
    "ANSWER to the question {input} IN ONE SENTENCE. DO NOT USE COMPLEX WORDS OR IDEAS";

inline constexpr std::string_view kOpenerPrefix = "Help me think about the question: ";

using PlaceholderValues = std::map<std::string, std::string, std::less<>>;

/// Text with {name} placeholders drawn from a fixed allowed set.
/// Rendering is single pass: substituted values are never re-expanded.
class PromptTemplate {
 public:
  /// Throws PreconditionError when the text uses a name outside `allowed`.
  PromptTemplate(std::string text, std::set<std::string, std::less<>> allowed);

  const std::string& text() const noexcept { return text_; }
  /// Placeholder names that occur in the text.
  const std::set<std::string, std::less<>>& placeholders() const noexcept { return used_; }
  bool references(std::string_view name) const { return used_.contains(name); }

  /// Throws PreconditionError when a referenced placeholder has no value.
  std::string render(const PlaceholderValues& values) const;

 private:
  std::string text_;
  std::set<std::string, std::less<>> used_;
};

/// The prompt for every tutor kind plus the learner. Defaults are the
/// built-in texts; an override file may replace any subset.
class TemplateSet {
 public:
  TemplateSet();

  /// JSON object with optional keys "socratic", "basic", "random",
  /// "baseline", "learner". Throws DataError/PreconditionError when a
  /// template breaks its kind's placeholder contract.
  static TemplateSet with_overrides(const std::filesystem::path& path);

  const PromptTemplate& tutor(TutorKind kind) const;
  const PromptTemplate& learner() const noexcept { return learner_; }

  void set_tutor(TutorKind kind, PromptTemplate tmpl);
  void set_learner(PromptTemplate tmpl);

  static const TemplateSet& defaults();

 private:
  std::array<std::optional<PromptTemplate>, 4> tutors_;
  PromptTemplate learner_;
};

struct Turn {
  int index = 0;  // 1-based
  std::string tutor_text;
  std::string learner_text;

  bool operator==(const Turn&) const = default;
};

struct RunMetadata {
  std::string tutor_model;
  std::string learner_model;
  GenerationParams tutor_params;
  GenerationParams learner_params;
  std::optional<std::string> started_at;
  std::optional<std::string> finished_at;

  bool operator==(const RunMetadata&) const = default;
};

/// One tutor/learner conversation. The scripted learner opener precedes
/// turn 1; each turn is a tutor utterance followed by a learner reply.
struct Transcript {
  int question_id = 0;
  TutorKind tutor_kind = TutorKind::kSocratic;
  std::string opener;
  std::vector<Turn> turns;
  RunMetadata meta;

  static Transcript start(TutorKind kind, const ToKItem& item);
  /// Throws DataError when the opener or turn numbering is inconsistent
  /// or a turn has an empty side.
  void validate(const ToKItem* item = nullptr) const;

  bool operator==(const Transcript&) const = default;
};

std::string make_opener(const ToKItem& item);

/// Single user message with the kind's template filled in. The baseline
/// ignores history and input.
std::vector<ChatMessage> render_tutor_prompt(TutorKind kind, const ToKItem& item, std::string_view history,
                                             std::string_view input,
                                             const TemplateSet& templates = TemplateSet::defaults());

/// Single user message built from the tutor question alone.
std::vector<ChatMessage> render_learner_prompt(std::string_view tutor_question,
                                               const TemplateSet& templates = TemplateSet::defaults());

/// "Student: <opener>" followed by "Tutor: ..."/"Student: ..." lines for
/// turns 1..upto_turn, newline separated.
std::string format_history(const Transcript& transcript, int upto_turn);

/// The latest thing the student said: the opener before turn 1, otherwise
/// the last learner reply.
std::string_view latest_student_text(const Transcript& transcript);

/// Cleans a raw completion: leading role labels, meta-framing such as
/// "My response to the student is", text after the first paragraph, and
/// enclosing quotes are removed. May return an empty string.
std::string sanitize_utterance(std::string_view raw);

struct Utterance {
  std::string text;    // sanitized
  std::string prompt;  // rendered prompt content, for the audit trail
};

/// Asks the tutor for its next utterance given the completed turns in
/// `transcript`. Backend errors are rethrown with the agent named.
Utterance next_tutor_utterance(ChatBackend& backend, TutorKind kind, const ToKItem& item,
                               const Transcript& transcript, const GenerationParams& params,
                               const TemplateSet& templates = TemplateSet::defaults());

Utterance next_learner_utterance(ChatBackend& backend, std::string_view tutor_question,
                                 const GenerationParams& params,
                                 const TemplateSet& templates = TemplateSet::defaults());

}  // namespace socratic
