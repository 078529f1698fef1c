#include "socratic/agents.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "socratic/error.hpp"
#include "socratic/util.hpp"

namespace socratic {

namespace {

const std::set<std::string, std::less<>> kTutorNames = {"tok_question", "history", "input"};
const std::set<std::string, std::less<>> kLearnerNames = {"input"};

bool is_name_char(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }

// Calls `on_text` for literal spans and `on_name` for each {name}.
template <typename OnText, typename OnName>
void scan_template(std::string_view text, OnText on_text, OnName on_name) {
  std::size_t i = 0;
  std::size_t literal_start = 0;
  while (i < text.size()) {
    if (text[i] == '{') {
      std::size_t j = i + 1;
      while (j < text.size() && is_name_char(text[j])) ++j;
      if (j > i + 1 && j < text.size() && text[j] == '}') {
        on_text(text.substr(literal_start, i - literal_start));
        on_name(text.substr(i + 1, j - i - 1));
        i = j + 1;
        literal_start = i;
        continue;
      }
    }
    ++i;
  }
  on_text(text.substr(literal_start));
}

std::size_t kind_index(TutorKind kind) { return static_cast<std::size_t>(kind); }

void check_tutor_contract(TutorKind kind, const PromptTemplate& t) {
  auto require = [&](std::string_view name) {
    if (!t.references(name))
      throw PreconditionError(std::string(to_string(kind)) + " template must reference {" + std::string(name) + "}");
  };
  switch (kind) {
    case TutorKind::kSocratic:
      require("tok_question");
      require("history");
      require("input");
      break;
    case TutorKind::kBasic:
    case TutorKind::kRandom:
      require("history");
      require("input");
      break;
    case TutorKind::kBaseline:
      require("tok_question");
      if (t.placeholders().size() != 1)
        throw PreconditionError("baseline template may only reference {tok_question}");
      break;
  }
}

// Removes "Tutor:"-style labels at the start of `s`.
std::string_view strip_role_labels(std::string_view s) {
  static constexpr std::array<std::string_view, 5> kLabels = {"tutor:", "student:", "ai:", "learner:",
                                                              "assistant:"};
  bool changed = true;
  while (changed) {
    changed = false;
    s = trim_view(s);
    for (auto label : kLabels) {
      if (starts_with_icase(s, label)) {
        s.remove_prefix(label.size());
        changed = true;
      }
    }
  }
  return s;
}

bool is_quote_or_punct(char c) {
  return c == ':' || c == ',' || c == '.' || c == '"' || c == '\'' || c == '-' ||
         std::isspace(static_cast<unsigned char>(c));
}

std::string_view strip_leading_noise(std::string_view s) {
  while (!s.empty()) {
    if (is_quote_or_punct(s.front())) {
      s.remove_prefix(1);
    } else if (s.starts_with("“") || s.starts_with("”")) {
      s.remove_prefix(3);
    } else {
      break;
    }
  }
  return s;
}

std::string_view strip_meta_framing(std::string_view s) {
  static constexpr std::array<std::string_view, 4> kPrefixes = {
      "if i were a socratic tutor, i would ask", "if i were a socratic tutor i would ask",
      "my response to the student is", "my response to the student would be"};
  for (auto prefix : kPrefixes) {
    if (!starts_with_icase(s, prefix)) continue;
    std::string_view rest = s.substr(prefix.size());
    bool quoted = false;
    const auto q = rest.find('?');
    if (q != std::string_view::npos) {
      // Start of the sentence holding the first question mark.
      std::size_t start = 0;
      for (std::size_t i = q; i-- > 0;) {
        const char c = rest[i];
        if (c == '.' || c == '!' || c == ':' || c == '"' || c == '\n') {
          start = i + 1;
          break;
        }
      }
      quoted = start > 0 && rest[start - 1] == '"';
      rest = rest.substr(start);
    }
    const std::string_view body = strip_leading_noise(rest);
    const std::string_view noise = rest.substr(0, rest.size() - body.size());
    // The framing swallowed an opening quote; drop its unmatched partner too.
    if ((quoted || noise.find('"') != std::string_view::npos) && body.ends_with('"') &&
        body.find('"') == body.size() - 1)
      return trim_view(body.substr(0, body.size() - 1));
    return body;
  }
  return s;
}

std::string_view first_paragraph(std::string_view s) {
  s = trim_view(s);
  std::size_t pos = 0;
  while ((pos = s.find('\n', pos)) != std::string_view::npos) {
    std::size_t k = pos + 1;
    while (k < s.size() && (s[k] == ' ' || s[k] == '\t' || s[k] == '\r')) ++k;
    if (k < s.size() && s[k] == '\n') return trim_view(s.substr(0, pos));
    pos = k;
  }
  return s;
}

std::string_view strip_enclosing_quotes(std::string_view s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return trim_view(s.substr(1, s.size() - 2));
  if (s.size() >= 6 && s.starts_with("“") && s.ends_with("”"))
    return trim_view(s.substr(3, s.size() - 6));
  return s;
}

BackendError with_context(const BackendError& e, const std::string& agent) {
  return BackendError(e.kind(), agent + ": " + e.what(), e.attempts(), e.status());
}

}  // namespace

std::string_view to_string(TutorKind kind) noexcept {
  switch (kind) {
    case TutorKind::kSocratic:
      return "socratic";
    case TutorKind::kBasic:
      return "basic";
    case TutorKind::kRandom:
      return "random";
    case TutorKind::kBaseline:
      return "baseline";
  }
  return "socratic";
}

std::optional<TutorKind> parse_tutor_kind(std::string_view name) noexcept {
  for (TutorKind kind : kAllTutorKinds) {
    const auto canonical = to_string(kind);
    if (name.size() == canonical.size() && starts_with_icase(name, canonical)) return kind;
  }
  return std::nullopt;
}

TutorKind tutor_kind_from_string(std::string_view name) {
  if (auto kind = parse_tutor_kind(name)) return *kind;
  throw PreconditionError("unknown tutor kind '" + std::string(name) + "'");
}

PromptTemplate::PromptTemplate(std::string text, std::set<std::string, std::less<>> allowed)
    : text_(std::move(text)) {
  scan_template(
      text_, [](std::string_view) {},
      [&](std::string_view name) {
        if (!allowed.contains(name))
          throw PreconditionError("template uses unknown placeholder {" + std::string(name) + "}");
        used_.emplace(name);
      });
}

std::string PromptTemplate::render(const PlaceholderValues& values) const {
  std::string out;
  out.reserve(text_.size());
  scan_template(
      text_, [&](std::string_view lit) { out += lit; },
      [&](std::string_view name) {
        auto it = values.find(name);
        if (it == values.end()) throw PreconditionError("unresolved placeholder {" + std::string(name) + "}");
        out += it->second;
      });
  return out;
}

TemplateSet::TemplateSet() : learner_(std::string(kLearnerTemplate), kLearnerNames) {
  tutors_[kind_index(TutorKind::kSocratic)].emplace(std::string(kSocraticTemplate), kTutorNames);
  tutors_[kind_index(TutorKind::kBasic)].emplace(std::string(kBasicTemplate), kTutorNames);
  tutors_[kind_index(TutorKind::kRandom)].emplace(std::string(kRandomTemplate), kTutorNames);
  tutors_[kind_index(TutorKind::kBaseline)].emplace(std::string(kBaselineTemplate), kTutorNames);
}

const TemplateSet& TemplateSet::defaults() {
  static const TemplateSet set;
  return set;
}

const PromptTemplate& TemplateSet::tutor(TutorKind kind) const { return *tutors_[kind_index(kind)]; }

void TemplateSet::set_tutor(TutorKind kind, PromptTemplate tmpl) {
  check_tutor_contract(kind, tmpl);
  tutors_[kind_index(kind)] = std::move(tmpl);
}

void TemplateSet::set_learner(PromptTemplate tmpl) {
  if (!tmpl.references("input")) throw PreconditionError("learner template must reference {input}");
  learner_ = std::move(tmpl);
}

TemplateSet TemplateSet::with_overrides(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open template override file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  auto doc = nlohmann::json::parse(buf.str(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw DataError(path.string() + ": expected a JSON object");

  TemplateSet set;
  for (auto& [key, value] : doc.items()) {
    if (!value.is_string()) throw DataError(path.string() + ": template '" + key + "' must be a string");
    if (key == "learner") {
      set.set_learner(PromptTemplate(value.get<std::string>(), kLearnerNames));
    } else if (auto kind = parse_tutor_kind(key)) {
      set.set_tutor(*kind, PromptTemplate(value.get<std::string>(), kTutorNames));
    } else {
      throw DataError(path.string() + ": unknown template key '" + key + "'");
    }
  }
  return set;
}

std::string make_opener(const ToKItem& item) { return std::string(kOpenerPrefix) + item.question; }

Transcript Transcript::start(TutorKind kind, const ToKItem& item) {
  Transcript t;
  t.question_id = item.id;
  t.tutor_kind = kind;
  t.opener = make_opener(item);
  return t;
}

void Transcript::validate(const ToKItem* item) const {
  if (!opener.starts_with(kOpenerPrefix)) throw DataError("transcript opener must start with the scripted request");
  if (item != nullptr && opener != make_opener(*item))
    throw DataError("transcript opener does not match question " + std::to_string(item->id));
  for (std::size_t i = 0; i < turns.size(); ++i) {
    const Turn& t = turns[i];
    if (t.index != static_cast<int>(i) + 1)
      throw DataError("turn indices must be 1..n without gaps (found " + std::to_string(t.index) + " at position " +
                      std::to_string(i + 1) + ")");
    if (trim_view(t.tutor_text).empty() || trim_view(t.learner_text).empty())
      throw DataError("turn " + std::to_string(t.index) + " has an empty utterance");
  }
}

std::vector<ChatMessage> render_tutor_prompt(TutorKind kind, const ToKItem& item, std::string_view history,
                                             std::string_view input, const TemplateSet& templates) {
  PlaceholderValues values = {{"tok_question", item.question}};
  if (kind != TutorKind::kBaseline) {
    values.emplace("history", std::string(history));
    values.emplace("input", std::string(input));
  }
  return {user_message(templates.tutor(kind).render(values))};
}

std::vector<ChatMessage> render_learner_prompt(std::string_view tutor_question, const TemplateSet& templates) {
  if (trim_view(tutor_question).empty()) throw PreconditionError("learner prompt needs a non-empty tutor question");
  return {user_message(templates.learner().render({{"input", std::string(tutor_question)}}))};
}

std::string format_history(const Transcript& transcript, int upto_turn) {
  if (upto_turn < 0 || upto_turn > static_cast<int>(transcript.turns.size()))
    throw PreconditionError("format_history: upto_turn " + std::to_string(upto_turn) + " outside [0, " +
                            std::to_string(transcript.turns.size()) + "]");
  std::string out = "Student: " + transcript.opener;
  for (int i = 0; i < upto_turn; ++i) {
    const Turn& t = transcript.turns[static_cast<std::size_t>(i)];
    out += "\nTutor: " + t.tutor_text;
    out += "\nStudent: " + t.learner_text;
  }
  return out;
}

std::string_view latest_student_text(const Transcript& transcript) {
  return transcript.turns.empty() ? std::string_view(transcript.opener)
                                  : std::string_view(transcript.turns.back().learner_text);
}

std::string sanitize_utterance(std::string_view raw) {
  std::string normalized;
  normalized.reserve(raw.size());
  for (char c : raw) {
    if (c != '\r') normalized += c;
  }
  std::string_view s = strip_role_labels(normalized);
  s = strip_meta_framing(s);
  s = first_paragraph(s);
  s = strip_role_labels(s);
  s = strip_enclosing_quotes(s);
  return trim(s);
}

Utterance next_tutor_utterance(ChatBackend& backend, TutorKind kind, const ToKItem& item,
                               const Transcript& transcript, const GenerationParams& params,
                               const TemplateSet& templates) {
  const int done = static_cast<int>(transcript.turns.size());
  const auto messages =
      render_tutor_prompt(kind, item, format_history(transcript, done), latest_student_text(transcript), templates);
  const std::string agent = "tutor[" + std::string(to_string(kind)) + "] turn " + std::to_string(done + 1);
  std::string text;
  try {
    text = sanitize_utterance(backend.chat_complete(messages, params));
  } catch (const BackendError& e) {
    throw with_context(e, agent);
  }
  if (text.empty()) throw BackendError(BackendError::Kind::kEmptyCompletion, agent + ": completion empty after cleanup");
  return {std::move(text), messages.front().content};
}

Utterance next_learner_utterance(ChatBackend& backend, std::string_view tutor_question,
                                 const GenerationParams& params, const TemplateSet& templates) {
  const auto messages = render_learner_prompt(tutor_question, templates);
  std::string text;
  try {
    text = sanitize_utterance(backend.chat_complete(messages, params));
  } catch (const BackendError& e) {
    throw with_context(e, "learner");
  }
  if (text.empty()) throw BackendError(BackendError::Kind::kEmptyCompletion, "learner: completion empty after cleanup");
  return {std::move(text), messages.front().content};
}

}  // namespace socratic
