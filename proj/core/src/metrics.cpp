#include "socratic/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "socratic/error.hpp"
#include "socratic/util.hpp"

namespace socratic {

std::string cumulative_learner_text(const Transcript& transcript, int upto_turn) {
  const int n = static_cast<int>(transcript.turns.size());
  if (upto_turn < 1 || upto_turn > n)
    throw PreconditionError("cumulative_learner_text: turn " + std::to_string(upto_turn) + " outside 1.." +
                            std::to_string(n));
  std::string out;
  for (int i = 0; i < upto_turn; ++i) {
    if (i > 0) out += ' ';
    out += transcript.turns[static_cast<std::size_t>(i)].learner_text;
  }
  return out;
}

namespace {

using NgramCounts = std::map<std::vector<std::string_view>, int>;

NgramCounts count_ngrams(const TokenSequence& tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::vector<std::string_view> gram(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                       tokens.begin() + static_cast<std::ptrdiff_t>(i + n));
    ++counts[gram];
  }
  return counts;
}

void require_reference(const TokenSequence& reference, const char* metric) {
  if (reference.empty()) throw PreconditionError(std::string(metric) + ": reference is empty");
}

}  // namespace

double bleu(const TokenSequence& candidate, const TokenSequence& reference) {
  require_reference(reference, "bleu");
  if (candidate.empty()) return 0.0;

  constexpr std::size_t kMaxOrder = 4;
  double log_sum = 0.0;
  int orders = 0;
  int zero_orders = 0;
  for (std::size_t n = 1; n <= kMaxOrder && n <= candidate.size(); ++n) {
    const NgramCounts cand = count_ngrams(candidate, n);
    const NgramCounts ref = count_ngrams(reference, n);
    int clipped = 0;
    for (const auto& [gram, count] : cand) {
      auto it = ref.find(gram);
      if (it != ref.end()) clipped += std::min(count, it->second);
    }
    const double denominator = static_cast<double>(candidate.size() - n + 1);
    double precision;
    if (clipped == 0) {
      ++zero_orders;
      precision = 1.0 / (std::ldexp(1.0, zero_orders) * denominator);
    } else {
      precision = clipped / denominator;
    }
    log_sum += std::log(precision);
    ++orders;
  }

  const double c = static_cast<double>(candidate.size());
  const double r = static_cast<double>(reference.size());
  const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return 100.0 * bp * std::exp(log_sum / orders);
}

double rouge_l(const TokenSequence& candidate, const TokenSequence& reference) {
  require_reference(reference, "rouge_l");
  if (candidate.empty()) return 0.0;

  std::vector<int> prev(reference.size() + 1, 0);
  std::vector<int> cur(reference.size() + 1, 0);
  for (const auto& c : candidate) {
    for (std::size_t j = 1; j <= reference.size(); ++j) {
      cur[j] = c == reference[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  const double lcs = prev[reference.size()];
  if (lcs == 0.0) return 0.0;
  const double p = lcs / static_cast<double>(candidate.size());
  const double r = lcs / static_cast<double>(reference.size());
  return 2.0 * p * r / (p + r);
}

namespace {

std::vector<double> norms_of(const TokenEmbeddings& e, const char* side) {
  std::vector<double> norms;
  norms.reserve(e.vectors.size());
  for (std::size_t i = 0; i < e.vectors.size(); ++i) {
    double s = 0.0;
    for (double x : e.vectors[i]) s += x * x;
    if (s == 0.0) throw DataError(std::string("bertscore: zero-norm ") + side + " vector for token '" + e.tokens[i] + "'");
    norms.push_back(std::sqrt(s));
  }
  return norms;
}

}  // namespace

BertScore bertscore_from_embeddings(const TokenEmbeddings& candidate, const TokenEmbeddings& reference) {
  if (candidate.vectors.empty() || reference.vectors.empty())
    throw PreconditionError("bertscore: both sides need at least one token");
  const std::size_t dim = candidate.vectors.front().size();
  for (const auto* side : {&candidate, &reference}) {
    if (side->tokens.size() != side->vectors.size())
      throw PreconditionError("bertscore: token/vector count mismatch");
    for (const auto& v : side->vectors) {
      if (v.size() != dim) throw PreconditionError("bertscore: embedding dimensions differ");
    }
  }
  const auto cn = norms_of(candidate, "candidate");
  const auto rn = norms_of(reference, "reference");

  const std::size_t nc = candidate.vectors.size();
  const std::size_t nr = reference.vectors.size();
  std::vector<double> row_max(nc, -2.0);
  std::vector<double> col_max(nr, -2.0);
  for (std::size_t i = 0; i < nc; ++i) {
    for (std::size_t j = 0; j < nr; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < dim; ++k) dot += candidate.vectors[i][k] * reference.vectors[j][k];
      const double cos = std::clamp(dot / (cn[i] * rn[j]), -1.0, 1.0);
      row_max[i] = std::max(row_max[i], cos);
      col_max[j] = std::max(col_max[j], cos);
    }
  }
  BertScore s;
  for (double x : row_max) s.precision += x;
  for (double x : col_max) s.recall += x;
  s.precision /= static_cast<double>(nc);
  s.recall /= static_cast<double>(nr);
  s.f1 = s.precision * s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

BertScore bertscore(std::string_view candidate_text, std::string_view reference_text, Embedder& embedder) {
  if (trim_view(candidate_text).empty() || trim_view(reference_text).empty())
    throw PreconditionError("bertscore: both texts must be non-empty");
  const TokenEmbeddings c = embedder.embed_tokens(candidate_text);
  const TokenEmbeddings r = embedder.embed_tokens(reference_text);
  return bertscore_from_embeddings(c, r);
}

}  // namespace socratic
