#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "socratic/scoring.hpp"

namespace socratic {

/// Metric columns carried through aggregation and reporting, in table order.
inline constexpr std::array<std::string_view, 5> kReportMetrics = {"bleu", "rouge_l", "meteor", "bert_f1", "llm"};

/// The value of a report metric in a score vector, if present. Throws
/// PreconditionError for names outside kReportMetrics.
std::optional<double> metric_value(const ScoreVector& scores, std::string_view metric);

/// Known tutor kinds first in their declared order, then any other labels
/// alphabetically. Duplicates are removed.
std::vector<std::string> order_tutors(std::vector<std::string> labels);

struct SummaryStat {
  std::optional<double> mean;  // empty when no value was available
  double std = 0.0;            // sample standard deviation, 0 when n < 2
  int n = 0;
  int excluded = 0;  // rows without a value for this metric

  bool operator==(const SummaryStat&) const = default;
};

struct TurnStat {
  int turn = 0;
  double mean = 0.0;
  double std = 0.0;
  int n = 0;

  bool operator==(const TurnStat&) const = default;
};

struct AggregateTable {
  std::vector<std::string> tutors;
  std::map<std::string, std::map<std::string, SummaryStat>> overall;                 // tutor -> metric
  std::map<std::string, std::map<std::string, std::vector<TurnStat>>> per_turn;      // tutor -> metric
  int rows = 0;

  /// Empty stat when the tutor or metric is absent.
  SummaryStat summary(const std::string& tutor, std::string_view metric) const;
  std::vector<TurnStat> series(const std::string& tutor, std::string_view metric) const;

  bool operator==(const AggregateTable&) const = default;
};

/// Means over every row of each tutor, overall and per turn. A row missing
/// a metric (for instance an unparseable llm judgement) is left out of that
/// metric only and counted in `excluded`. Independent of row order.
/// Throws PreconditionError on empty input.
AggregateTable aggregate(std::span<const ScoreRow> rows);

/// Regularized incomplete beta function I_x(a, b). Throws PreconditionError
/// unless a > 0, b > 0 and 0 <= x <= 1.
double regularized_incomplete_beta(double a, double b, double x);

/// Student-t cumulative distribution function.
double student_t_cdf(double t, double df);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;  // two-sided
};

/// Welch's unequal-variance t-test with Welch-Satterthwaite degrees of
/// freedom. Throws PreconditionError when a sample has fewer than two
/// values or both samples are constant with the same mean. Two constant
/// samples with different means give t = +-inf, p = 0, df = n_a + n_b - 2.
WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

/// What one observation in a significance test is.
enum class SamplingUnit {
  kFinalTurn,         // last scored turn of each conversation
  kAllTurns,          // every (conversation, turn) row
  kConversationMean,  // mean over a conversation's turns
};

/// "final-turn", "all-turns", "conversation-mean".
std::string_view to_string(SamplingUnit unit) noexcept;
/// Throws PreconditionError on unknown names.
SamplingUnit parse_sampling_unit(std::string_view name);

/// Tutor label -> observations of `metric`, in a canonical order.
std::map<std::string, std::vector<double>> collect_samples(std::span<const ScoreRow> rows, std::string_view metric,
                                                           SamplingUnit unit);

struct SignificanceEntry {
  std::string metric;
  std::string tutor_a;
  std::string tutor_b;
  int n_a = 0;
  int n_b = 0;
  std::optional<WelchResult> result;
  std::string note;  // why result is empty
};

/// Welch tests for every tutor pair (in `tutors` order) and every report
/// metric. Pairs that cannot be tested carry a note instead of a result.
std::vector<SignificanceEntry> significance_tests(std::span<const ScoreRow> rows,
                                                  const std::vector<std::string>& tutors,
                                                  SamplingUnit unit = SamplingUnit::kFinalTurn);

}  // namespace socratic
