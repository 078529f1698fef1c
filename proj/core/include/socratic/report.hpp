#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "socratic/stats.hpp"

namespace socratic {

/// Column title used in the summary table and chart headings.
std::string_view metric_display_name(std::string_view metric);

/// Three decimals below 1, three significant figures from 1 upwards:
/// 0.67 -> "0.670", 3.42 -> "3.42", 0.092 -> "0.092".
std::string format_summary_value(double value);

/// "tutor,BLEU,ROUGE-L,METEOR,BERTScore,LLM Score" plus one row per tutor.
std::string summary_csv(const AggregateTable& table);

/// tutor,turn,mean,std,n for one metric.
std::string per_turn_csv(const AggregateTable& table, std::string_view metric);

/// Self-contained line chart: turn on the x axis, one polyline per tutor.
std::string svg_chart(const AggregateTable& table, std::string_view metric);

/// metric,tutor_a,tutor_b,n_a,n_b,t,df,p,note.
std::string significance_csv(const std::vector<SignificanceEntry>& tests);

/// Writes summary.csv, per_turn_<metric>.csv and <metric>.svg for every
/// report metric, and significance.csv. Returns the paths written.
/// Throws DataError on I/O failure.
std::vector<std::filesystem::path> emit_report(const AggregateTable& table,
                                               const std::vector<SignificanceEntry>& tests,
                                               const std::filesystem::path& out_dir);

/// Table of published per-tutor means, no per-turn data:
/// {"tutors": [{"label": "...", "means": {"bleu": 3.42, ...}}, ...]}.
/// Tutor order is kept as given. Throws DataError on schema violations.
AggregateTable means_fixture_from_json(const nlohmann::json& j);
AggregateTable load_means_fixture(const std::filesystem::path& path);

}  // namespace socratic
