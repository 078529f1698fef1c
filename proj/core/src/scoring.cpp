#include "socratic/scoring.hpp"

#include <atomic>
#include <charconv>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "socratic/error.hpp"
#include "socratic/judge.hpp"
#include "socratic/records.hpp"
#include "socratic/simulator.hpp"
#include "socratic/util.hpp"

namespace socratic {

std::string_view to_string(Metric metric) noexcept {
  switch (metric) {
    case Metric::kBleu:
      return "bleu";
    case Metric::kRougeL:
      return "rouge_l";
    case Metric::kMeteor:
      return "meteor";
    case Metric::kBertScore:
      return "bertscore";
    case Metric::kLlm:
      return "llm";
  }
  return "bleu";
}

namespace {

constexpr Metric kAllMetrics[] = {Metric::kBleu, Metric::kRougeL, Metric::kMeteor, Metric::kBertScore, Metric::kLlm};

}  // namespace

MetricSet MetricSet::all() {
  MetricSet s;
  for (Metric m : kAllMetrics) s.add(m);
  return s;
}

MetricSet MetricSet::parse(std::string_view list) {
  MetricSet s;
  for (const auto& raw : split(list, ',')) {
    const std::string name = trim(raw);
    if (name == "all") {
      s = all();
      continue;
    }
    bool found = false;
    for (Metric m : kAllMetrics) {
      if (name == socratic::to_string(m) || (m == Metric::kBertScore && name == "bert_f1")) {
        s.add(m);
        found = true;
      }
    }
    if (!found) throw PreconditionError("unknown metric '" + name + "' (expected bleu, rouge_l, meteor, bertscore, llm)");
  }
  if (s.empty()) throw PreconditionError("no metrics selected");
  return s;
}

std::string MetricSet::to_string() const {
  std::vector<std::string> names;
  for (Metric m : kAllMetrics) {
    if (contains(m)) names.emplace_back(socratic::to_string(m));
  }
  return join(names, ",");
}

std::vector<ScoreVector> score_transcript(const Transcript& transcript, const ToKItem& item,
                                          const ScoringBackends& backends, const ScoringOptions& options) {
  if (transcript.turns.empty()) throw PreconditionError("score_transcript: transcript has no complete turn");
  const MetricSet& metrics = options.metrics;
  if (metrics.contains(Metric::kBertScore) && backends.embedder == nullptr)
    throw PreconditionError("score_transcript: bertscore needs an embedder");
  if (metrics.contains(Metric::kLlm) && backends.judge == nullptr)
    throw PreconditionError("score_transcript: llm needs a judge backend");

  const TokenSequence reference = tokenize(item.reference_summary);
  std::optional<TokenEmbeddings> reference_embeddings;
  std::string reference_embed_error;
  if (metrics.contains(Metric::kBertScore)) {
    try {
      reference_embeddings = backends.embedder->embed_tokens(item.reference_summary);
    } catch (const Error& e) {
      reference_embed_error = std::string("reference embedding: ") + e.what();
    }
  }

  std::vector<ScoreVector> out;
  out.reserve(transcript.turns.size());
  for (int t = 1; t <= static_cast<int>(transcript.turns.size()); ++t) {
    const std::string text = cumulative_learner_text(transcript, t);
    const TokenSequence candidate = tokenize(text);
    ScoreVector v;
    auto attempt = [&](Metric m, auto&& fn) {
      if (!metrics.contains(m)) return;
      try {
        fn();
      } catch (const Error& e) {
        v.errors[std::string(to_string(m))] = e.what();
      }
    };
    attempt(Metric::kBleu, [&] { v.bleu = bleu(candidate, reference); });
    attempt(Metric::kRougeL, [&] { v.rouge_l = rouge_l(candidate, reference); });
    attempt(Metric::kMeteor, [&] { v.meteor = meteor(candidate, reference, options.meteor); });
    attempt(Metric::kBertScore, [&] {
      if (!reference_embeddings) throw BackendError(BackendError::Kind::kBadResponse, reference_embed_error);
      const BertScore b = bertscore_from_embeddings(backends.embedder->embed_tokens(text), *reference_embeddings);
      v.bert_p = b.precision;
      v.bert_r = b.recall;
      v.bert_f1 = b.f1;
    });
    attempt(Metric::kLlm, [&] {
      const LlmScore s =
          llm_score(item.question, text, *backends.judge, backends.judge_params, backends.judge_attempts);
      v.llm = s.value;
      v.llm_missing_reason = s.missing_reason;
      if (!s.error.empty()) v.errors["llm"] = s.error;
    });
    if (metrics.contains(Metric::kLlm) && !v.llm && v.llm_missing_reason.empty())
      v.llm_missing_reason = kMissingBackendError;
    out.push_back(std::move(v));
  }
  return out;
}

namespace {

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string opt_number(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

// Splits one CSV record. Quoted fields may not span lines here; every field
// this module writes is single-line.
std::vector<std::string> parse_csv_line(std::string_view line, const std::string& where) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  bool field_started_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"' && cur.empty() && !field_started_quoted) {
      quoted = true;
      field_started_quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
      field_started_quoted = false;
    } else {
      cur += c;
    }
  }
  if (quoted) throw DataError(where + ": unterminated quoted field");
  fields.push_back(std::move(cur));
  return fields;
}

int parse_int(const std::string& s, const std::string& where, const char* column) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw DataError(where + ": column " + column + " is not an integer: '" + s + "'");
  return v;
}

std::optional<double> parse_opt_double(const std::string& s, const std::string& where, const char* column) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw DataError(where + ": column " + column + " is not a number: '" + s + "'");
  return v;
}

}  // namespace

void write_scores_csv(std::ostream& out, const std::vector<ScoreRow>& rows) {
  out << kScoresHeader << '\n';
  for (const ScoreRow& r : rows) {
    const ScoreVector& s = r.scores;
    out << csv_field(r.run_id) << ',' << csv_field(r.tutor) << ',' << r.question_id << ',' << r.conversation_index
        << ',' << r.turn << ',' << opt_number(s.bleu) << ',' << opt_number(s.rouge_l) << ','
        << opt_number(s.meteor) << ',' << opt_number(s.bert_p) << ',' << opt_number(s.bert_r) << ','
        << opt_number(s.bert_f1) << ',' << opt_number(s.llm) << ',' << csv_field(s.llm_missing_reason) << '\n';
  }
}

void write_scores_csv(const std::filesystem::path& path, const std::vector<ScoreRow>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  write_scores_csv(out, rows);
  if (!out) throw DataError("write failed for " + path.string());
}

std::vector<ScoreRow> read_scores_csv(std::istream& in, std::string_view source) {
  std::string line;
  int line_no = 0;
  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  if (!next_line()) throw DataError(std::string(source) + ": empty scores file");
  if (line != kScoresHeader) throw DataError(std::string(source) + ":1: unexpected header '" + line + "'");

  std::vector<ScoreRow> rows;
  while (next_line()) {
    if (trim_view(line).empty()) continue;
    const std::string where = std::string(source) + ":" + std::to_string(line_no);
    const auto f = parse_csv_line(line, where);
    if (f.size() != 13)
      throw DataError(where + ": expected 13 columns, found " + std::to_string(f.size()));
    ScoreRow r;
    r.run_id = f[0];
    r.tutor = f[1];
    if (r.tutor.empty()) throw DataError(where + ": empty tutor");
    r.question_id = parse_int(f[2], where, "question_id");
    r.conversation_index = parse_int(f[3], where, "conversation_index");
    r.turn = parse_int(f[4], where, "turn");
    if (r.turn < 1) throw DataError(where + ": turn must be >= 1");
    r.scores.bleu = parse_opt_double(f[5], where, "bleu");
    r.scores.rouge_l = parse_opt_double(f[6], where, "rouge_l");
    r.scores.meteor = parse_opt_double(f[7], where, "meteor");
    r.scores.bert_p = parse_opt_double(f[8], where, "bert_p");
    r.scores.bert_r = parse_opt_double(f[9], where, "bert_r");
    r.scores.bert_f1 = parse_opt_double(f[10], where, "bert_f1");
    r.scores.llm = parse_opt_double(f[11], where, "llm");
    r.scores.llm_missing_reason = f[12];
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ScoreRow> read_scores_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_scores_csv(in, path.string());
}

ScoreRunResult score_run(const std::filesystem::path& run_dir, const QuestionBank& bank,
                         const ScoringBackends& backends, const ScoreRunOptions& options) {
  if (options.max_in_flight < 1) throw PreconditionError("max_in_flight must be >= 1");
  const RunManifest manifest = load_manifest(run_dir);

  ScoreRunResult result;
  std::vector<ConversationRecord> records;
  for (const CellSummary& cell : manifest.cells) {
    for (auto& rec : read_records(run_dir / cell.file)) {
      if (rec.transcript.turns.empty() || (rec.failed() && !options.include_partials)) {
        ++result.conversations_excluded;
        continue;
      }
      if (!bank.find(rec.transcript.question_id))
        throw DataError(cell.file + ": unknown question id " + std::to_string(rec.transcript.question_id));
      records.push_back(std::move(rec));
    }
  }

  std::vector<std::vector<ScoreVector>> scored(records.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= records.size()) return;
      try {
        const Transcript& t = records[i].transcript;
        scored[i] = score_transcript(t, bank.get(t.question_id), backends, options.scoring);
      } catch (...) {
        std::lock_guard lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
        next = records.size();
        return;
      }
    }
  };
  {
    const std::size_t n_workers = std::min<std::size_t>(static_cast<std::size_t>(options.max_in_flight),
                                                        std::max<std::size_t>(records.size(), 1));
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  if (fatal) std::rethrow_exception(fatal);

  for (std::size_t i = 0; i < records.size(); ++i) {
    const Transcript& t = records[i].transcript;
    for (std::size_t k = 0; k < scored[i].size(); ++k) {
      ScoreRow row;
      row.run_id = manifest.run_id;
      row.tutor = std::string(to_string(t.tutor_kind));
      row.question_id = t.question_id;
      row.conversation_index = records[i].conversation_index;
      row.turn = static_cast<int>(k) + 1;
      row.scores = std::move(scored[i][k]);
      result.metric_errors += static_cast<int>(row.scores.errors.size());
      result.rows.push_back(std::move(row));
    }
    ++result.conversations_scored;
  }
  return result;
}

}  // namespace socratic
