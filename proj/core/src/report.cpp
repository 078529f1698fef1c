#include "socratic/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "socratic/error.hpp"
#include "socratic/util.hpp"

namespace socratic {

std::string_view metric_display_name(std::string_view metric) {
  if (metric == "bleu") return "BLEU";
  if (metric == "rouge_l") return "ROUGE-L";
  if (metric == "meteor") return "METEOR";
  if (metric == "bert_f1") return "BERTScore";
  if (metric == "llm") return "LLM Score";
  throw PreconditionError("unknown report metric '" + std::string(metric) + "'");
}

namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

int integer_digits(double v) { return static_cast<int>(std::floor(std::log10(std::fabs(v)))) + 1; }

}  // namespace

std::string format_summary_value(double value) {
  if (!std::isfinite(value)) return format_double(value);
  if (std::fabs(value) < 1.0) {
    std::string s = fixed(value, 3);
    // Values just below 1 can round up to "1.000"; keep three significant figures there too.
    if (s == "1.000" || s == "-1.000") s = fixed(value, 2);
    return s == "-0.000" ? "0.000" : s;
  }
  int decimals = std::max(0, 3 - integer_digits(value));
  std::string s = fixed(value, decimals);
  if (decimals > 0 && integer_digits(std::stod(s)) > integer_digits(value)) s = fixed(value, decimals - 1);
  return s;
}

std::string summary_csv(const AggregateTable& table) {
  std::string out = "tutor";
  for (std::string_view m : kReportMetrics) {
    out += ',';
    out += metric_display_name(m);
  }
  out += '\n';
  for (const auto& tutor : table.tutors) {
    out += csv_field(tutor);
    for (std::string_view m : kReportMetrics) {
      out += ',';
      if (const auto mean = table.summary(tutor, m).mean) out += format_summary_value(*mean);
    }
    out += '\n';
  }
  return out;
}

std::string per_turn_csv(const AggregateTable& table, std::string_view metric) {
  metric_display_name(metric);
  std::string out = "tutor,turn,mean,std,n\n";
  for (const auto& tutor : table.tutors) {
    for (const TurnStat& t : table.series(tutor, metric)) {
      out += csv_field(tutor) + ',' + std::to_string(t.turn) + ',' + format_double(t.mean) + ',' +
             format_double(t.std) + ',' + std::to_string(t.n) + '\n';
    }
  }
  return out;
}

std::string svg_chart(const AggregateTable& table, std::string_view metric) {
  static constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                             "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  constexpr double kWidth = 640, kHeight = 400;
  constexpr double kLeft = 64, kRight = 176, kTop = 40, kBottom = 48;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;

  int max_turn = 1;
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (const auto& tutor : table.tutors) {
    for (const TurnStat& t : table.series(tutor, metric)) {
      max_turn = std::max(max_turn, t.turn);
      lo = any ? std::min(lo, t.mean) : std::min(0.0, t.mean);
      hi = any ? std::max(hi, t.mean) : t.mean;
      any = true;
    }
  }
  hi = hi > lo ? hi + 0.1 * (hi - lo) : lo + 1.0;

  auto x_of = [&](int turn) {
    return max_turn == 1 ? kLeft + plot_w / 2 : kLeft + plot_w * (turn - 1) / (max_turn - 1);
  };
  auto y_of = [&](double v) { return kTop + plot_h * (1.0 - (v - lo) / (hi - lo)); };
  auto num = [](double v) { return fixed(v, 2); };

  const std::string title = std::string(metric_display_name(metric));
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<title>" << xml_escape(title) << " by turn</title>\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  svg << "<text x=\"" << num(kLeft + plot_w / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
      << xml_escape(title) << "</text>\n";

  svg << "<g class=\"axes\" stroke=\"#333333\" fill=\"none\">\n";
  svg << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop + plot_h) << "\" x2=\"" << num(kLeft + plot_w)
      << "\" y2=\"" << num(kTop + plot_h) << "\"/>\n";
  svg << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(kLeft) << "\" y2=\""
      << num(kTop + plot_h) << "\"/>\n";
  svg << "</g>\n";

  svg << "<g class=\"ticks\" fill=\"#333333\">\n";
  for (int turn = 1; turn <= max_turn; ++turn) {
    svg << "<text x=\"" << num(x_of(turn)) << "\" y=\"" << num(kTop + plot_h + 18) << "\" text-anchor=\"middle\">"
        << turn << "</text>\n";
  }
  constexpr int kYTicks = 5;
  for (int k = 0; k <= kYTicks; ++k) {
    const double v = lo + (hi - lo) * k / kYTicks;
    char label[32];
    std::snprintf(label, sizeof label, "%.3g", v);
    svg << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(y_of(v) + 4) << "\" text-anchor=\"end\">" << label
        << "</text>\n";
  }
  svg << "<text x=\"" << num(kLeft + plot_w / 2) << "\" y=\"" << num(kHeight - 10)
      << "\" text-anchor=\"middle\">Turn</text>\n";
  svg << "</g>\n";

  std::size_t color = 0;
  for (const auto& tutor : table.tutors) {
    const auto series = table.series(tutor, metric);
    const char* stroke = kPalette[color % std::size(kPalette)];
    svg << "<g class=\"series\" data-tutor=\"" << xml_escape(tutor) << "\">\n";
    svg << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < series.size(); ++i) {
      if (i > 0) svg << ' ';
      svg << num(x_of(series[i].turn)) << ',' << num(y_of(series[i].mean));
    }
    svg << "\"/>\n";
    for (const TurnStat& t : series) {
      svg << "<circle cx=\"" << num(x_of(t.turn)) << "\" cy=\"" << num(y_of(t.mean)) << "\" r=\"3\" fill=\""
          << stroke << "\"/>\n";
    }
    const double ly = kTop + 12 + 18.0 * static_cast<double>(color);
    svg << "<line x1=\"" << num(kWidth - kRight + 16) << "\" y1=\"" << num(ly) << "\" x2=\""
        << num(kWidth - kRight + 36) << "\" y2=\"" << num(ly) << "\" stroke=\"" << stroke
        << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << num(kWidth - kRight + 42) << "\" y=\"" << num(ly + 4) << "\">" << xml_escape(tutor)
        << "</text>\n";
    svg << "</g>\n";
    ++color;
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string significance_csv(const std::vector<SignificanceEntry>& tests) {
  std::string out = "metric,tutor_a,tutor_b,n_a,n_b,t,df,p,note\n";
  for (const auto& e : tests) {
    out += e.metric + ',' + csv_field(e.tutor_a) + ',' + csv_field(e.tutor_b) + ',' + std::to_string(e.n_a) + ',' +
           std::to_string(e.n_b) + ',';
    if (e.result) {
      out += format_double(e.result->t) + ',' + format_double(e.result->df) + ',' + format_double(e.result->p);
    } else {
      out += ",,";
    }
    out += ',' + csv_field(e.note) + '\n';
  }
  return out;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace

std::vector<std::filesystem::path> emit_report(const AggregateTable& table,
                                               const std::vector<SignificanceEntry>& tests,
                                               const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create " + out_dir.string() + ": " + ec.message());

  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::string& name, const std::string& content) {
    written.push_back(out_dir / name);
    write_file(written.back(), content);
  };
  emit("summary.csv", summary_csv(table));
  for (std::string_view m : kReportMetrics) {
    emit("per_turn_" + std::string(m) + ".csv", per_turn_csv(table, m));
    emit(std::string(m) + ".svg", svg_chart(table, m));
  }
  emit("significance.csv", significance_csv(tests));
  return written;
}

AggregateTable means_fixture_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("tutors") || !j["tutors"].is_array() || j["tutors"].empty())
    throw DataError("means fixture: needs a non-empty 'tutors' array");
  AggregateTable table;
  for (const auto& t : j["tutors"]) {
    if (!t.is_object() || !t.contains("label") || !t["label"].is_string())
      throw DataError("means fixture: every tutor needs a string 'label'");
    const std::string label = t["label"].get<std::string>();
    if (std::find(table.tutors.begin(), table.tutors.end(), label) != table.tutors.end())
      throw DataError("means fixture: duplicate tutor '" + label + "'");
    if (!t.contains("means") || !t["means"].is_object())
      throw DataError("means fixture: tutor '" + label + "' has no 'means' object");
    table.tutors.push_back(label);
    for (const auto& [key, value] : t["means"].items()) {
      if (std::find(kReportMetrics.begin(), kReportMetrics.end(), key) == kReportMetrics.end())
        throw DataError("means fixture: unknown metric '" + key + "' for tutor '" + label + "'");
      if (!value.is_number()) throw DataError("means fixture: " + label + "." + key + " is not a number");
      SummaryStat s;
      s.mean = value.get<double>();
      table.overall[label][key] = s;
    }
  }
  return table;
}

AggregateTable load_means_fixture(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const auto j = nlohmann::json::parse(buf.str(), nullptr, false);
  if (j.is_discarded()) throw DataError(path.string() + ": not valid JSON");
  try {
    return means_fixture_from_json(j);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace socratic
