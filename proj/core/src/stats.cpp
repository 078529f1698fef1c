#include "socratic/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <tuple>

#include "socratic/agents.hpp"
#include "socratic/error.hpp"

namespace socratic {

std::optional<double> metric_value(const ScoreVector& s, std::string_view metric) {
  if (metric == "bleu") return s.bleu;
  if (metric == "rouge_l") return s.rouge_l;
  if (metric == "meteor") return s.meteor;
  if (metric == "bert_f1") return s.bert_f1;
  if (metric == "llm") return s.llm;
  throw PreconditionError("unknown report metric '" + std::string(metric) + "'");
}

std::vector<std::string> order_tutors(std::vector<std::string> labels) {
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  std::vector<std::string> out;
  for (TutorKind k : kAllTutorKinds) {
    auto it = std::find(labels.begin(), labels.end(), to_string(k));
    if (it != labels.end()) {
      out.push_back(*it);
      labels.erase(it);
    }
  }
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

SummaryStat AggregateTable::summary(const std::string& tutor, std::string_view metric) const {
  auto it = overall.find(tutor);
  if (it == overall.end()) return {};
  auto jt = it->second.find(std::string(metric));
  return jt == it->second.end() ? SummaryStat{} : jt->second;
}

std::vector<TurnStat> AggregateTable::series(const std::string& tutor, std::string_view metric) const {
  auto it = per_turn.find(tutor);
  if (it == per_turn.end()) return {};
  auto jt = it->second.find(std::string(metric));
  return jt == it->second.end() ? std::vector<TurnStat>{} : jt->second;
}

namespace {

// Mean and sample standard deviation. Values are sorted first so the
// result does not depend on input order down to the last bit.
std::pair<double, double> mean_std(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += x;
  const double mean = sum / static_cast<double>(v.size());
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

}  // namespace

AggregateTable aggregate(std::span<const ScoreRow> rows) {
  if (rows.empty()) throw PreconditionError("aggregate: no score rows");
  AggregateTable table;
  table.rows = static_cast<int>(rows.size());

  std::vector<std::string> labels;
  // tutor -> metric -> turn -> values; turn 0 collects every row.
  std::map<std::string, std::map<std::string, std::map<int, std::vector<double>>>> values;
  std::map<std::string, std::map<std::string, int>> excluded;
  for (const ScoreRow& r : rows) {
    labels.push_back(r.tutor);
    for (std::string_view m : kReportMetrics) {
      const std::string metric(m);
      if (auto v = metric_value(r.scores, m)) {
        values[r.tutor][metric][0].push_back(*v);
        values[r.tutor][metric][r.turn].push_back(*v);
      } else {
        ++excluded[r.tutor][metric];
      }
    }
  }
  table.tutors = order_tutors(std::move(labels));
  for (const auto& tutor : table.tutors) {
    for (std::string_view m : kReportMetrics) {
      const std::string metric(m);
      SummaryStat s;
      s.excluded = excluded[tutor][metric];
      std::vector<TurnStat> turns;
      for (auto& [turn, v] : values[tutor][metric]) {
        const auto [mean, sd] = mean_std(v);
        if (turn == 0) {
          s.mean = mean;
          s.std = sd;
          s.n = static_cast<int>(v.size());
        } else {
          turns.push_back({turn, mean, sd, static_cast<int>(v.size())});
        }
      }
      table.overall[tutor][metric] = s;
      table.per_turn[tutor][metric] = std::move(turns);
    }
  }
  return table;
}

namespace {

// Continued fraction for I_x(a, b), modified Lentz method.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) return h;
  }
  return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw PreconditionError("incomplete beta: a and b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw PreconditionError("incomplete beta: x must be in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
  if (!(df > 0.0)) throw PreconditionError("student_t_cdf: df must be positive");
  if (std::isnan(t)) throw PreconditionError("student_t_cdf: t is NaN");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
  return t > 0 ? 1.0 - tail : tail;
}

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2)
    throw PreconditionError("welch_t_test: each sample needs at least 2 values (got " + std::to_string(a.size()) +
                            " and " + std::to_string(b.size()) + ")");
  const auto [ma, sa] = mean_std({a.begin(), a.end()});
  const auto [mb, sb] = mean_std({b.begin(), b.end()});
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double qa = sa * sa / na;
  const double qb = sb * sb / nb;
  const double se2 = qa + qb;

  WelchResult r;
  if (se2 == 0.0) {
    if (ma == mb) throw PreconditionError("welch_t_test: both samples are constant with equal means");
    r.t = ma > mb ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    r.df = na + nb - 2.0;
    r.p = 0.0;
    return r;
  }
  r.t = (ma - mb) / std::sqrt(se2);
  r.df = se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
  r.p = regularized_incomplete_beta(r.df / 2.0, 0.5, r.df / (r.df + r.t * r.t));
  return r;
}

std::string_view to_string(SamplingUnit unit) noexcept {
  switch (unit) {
    case SamplingUnit::kFinalTurn:
      return "final-turn";
    case SamplingUnit::kAllTurns:
      return "all-turns";
    case SamplingUnit::kConversationMean:
      return "conversation-mean";
  }
  return "final-turn";
}

SamplingUnit parse_sampling_unit(std::string_view name) {
  for (auto u : {SamplingUnit::kFinalTurn, SamplingUnit::kAllTurns, SamplingUnit::kConversationMean}) {
    if (name == to_string(u)) return u;
  }
  throw PreconditionError("unknown sampling unit '" + std::string(name) +
                          "' (expected final-turn, all-turns or conversation-mean)");
}

std::map<std::string, std::vector<double>> collect_samples(std::span<const ScoreRow> rows, std::string_view metric,
                                                           SamplingUnit unit) {
  using Key = std::tuple<std::string, int, int>;  // run, question, conversation
  // tutor -> conversation -> turn -> value
  std::map<std::string, std::map<Key, std::map<int, std::optional<double>>>> grouped;
  for (const ScoreRow& r : rows) {
    grouped[r.tutor][{r.run_id, r.question_id, r.conversation_index}][r.turn] = metric_value(r.scores, metric);
  }
  std::map<std::string, std::vector<double>> out;
  for (const auto& [tutor, conversations] : grouped) {
    std::vector<double>& sample = out[tutor];
    for (const auto& [key, turns] : conversations) {
      switch (unit) {
        case SamplingUnit::kFinalTurn:
          if (const auto& v = turns.rbegin()->second) sample.push_back(*v);
          break;
        case SamplingUnit::kAllTurns:
          for (const auto& [turn, v] : turns) {
            if (v) sample.push_back(*v);
          }
          break;
        case SamplingUnit::kConversationMean: {
          std::vector<double> present;
          for (const auto& [turn, v] : turns) {
            if (v) present.push_back(*v);
          }
          if (!present.empty()) sample.push_back(mean_std(std::move(present)).first);
          break;
        }
      }
    }
  }
  return out;
}

std::vector<SignificanceEntry> significance_tests(std::span<const ScoreRow> rows,
                                                  const std::vector<std::string>& tutors, SamplingUnit unit) {
  std::vector<SignificanceEntry> out;
  for (std::string_view m : kReportMetrics) {
    const auto samples = collect_samples(rows, m, unit);
    auto sample_of = [&](const std::string& tutor) {
      auto it = samples.find(tutor);
      return it == samples.end() ? std::vector<double>{} : it->second;
    };
    for (std::size_t i = 0; i < tutors.size(); ++i) {
      for (std::size_t j = i + 1; j < tutors.size(); ++j) {
        SignificanceEntry e;
        e.metric = std::string(m);
        e.tutor_a = tutors[i];
        e.tutor_b = tutors[j];
        const auto a = sample_of(e.tutor_a);
        const auto b = sample_of(e.tutor_b);
        e.n_a = static_cast<int>(a.size());
        e.n_b = static_cast<int>(b.size());
        try {
          e.result = welch_t_test(a, b);
        } catch (const PreconditionError& err) {
          e.note = err.what();
        }
        out.push_back(std::move(e));
      }
    }
  }
  return out;
}

}  // namespace socratic
