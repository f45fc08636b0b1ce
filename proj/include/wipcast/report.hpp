// Copyright 2026-present the wipcast project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

// Evaluation outputs: predictions.csv, metrics.csv, report.svg and the
// per-day forecast run log.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "wipcast/agents.hpp"
#include "wipcast/csv.hpp"
#include "wipcast/error.hpp"
#include "wipcast/eval.hpp"

namespace wipcast {

/// Shortest representation that parses back to the same double.
inline std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read '" + path.string() + "'");
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// ---------------------------------------------------------------------------
// predictions.csv: date,source,actual,predicted

inline std::string predictions_csv(std::span<const PredictionTrace> traces) {
  std::string out = "date,source,actual,predicted\n";
  for (const auto& t : traces) {
    for (const auto& e : t.entries) {
      out += format_date(e.date) + "," + std::string(to_string(t.source)) + "," + format_real(e.actual) + "," +
             format_real(e.predicted) + "\n";
    }
  }
  return out;
}

inline std::vector<PredictionTrace> traces_from_predictions_csv(std::string_view text) {
  const auto records = csv::read(text);
  if (records.empty() || records[0].fields != std::vector<std::string>{"date", "source", "actual", "predicted"}) {
    throw ParseError("predictions CSV must start with header date,source,actual,predicted");
  }
  std::vector<PredictionTrace> out;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& f = records[r].fields;
    if (f.size() != 4) throw ParseError("expected 4 fields", records[r].line, 1);
    const Source src = parse_source(f[1]);
    auto it = std::find_if(out.begin(), out.end(), [&](const PredictionTrace& t) { return t.source == src; });
    if (it == out.end()) {
      out.push_back(PredictionTrace{src, {}});
      it = out.end() - 1;
    }
    TraceEntry e;
    e.date = parse_date(f[0]);
    try {
      e.actual = std::stod(f[2]);
      e.predicted = std::stod(f[3]);
    } catch (const std::exception&) {
      throw ParseError("non-numeric value", records[r].line, 1);
    }
    if (!it->entries.empty() && e.date <= it->entries.back().date) {
      throw ParseError("dates must increase within a source", records[r].line, 1);
    }
    it->entries.push_back(e);
  }
  return out;
}

// metrics.csv: source,mape,mae,n,skipped
inline std::string metrics_csv(std::span<const PredictionTrace> traces) {
  std::string out = "source,mape,mae,n,skipped\n";
  for (const auto& t : traces) {
    if (t.entries.empty()) continue;
    std::string mape_text = "nan";
    std::size_t skipped = t.entries.size();
    try {
      const auto m = mape(t);
      mape_text = format_real(m.mape);
      skipped = m.skipped_zero_actuals;
    } catch (const InvalidArgument&) {
    }
    out += std::string(to_string(t.source)) + "," + mape_text + "," + format_real(mae(t)) + "," +
           std::to_string(t.entries.size()) + "," + std::to_string(skipped) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// SVG

struct ReportOptions {
  std::string title = "WiP forecast evaluation";
  std::string header_note;  // e.g. split date and generation time
  std::size_t rolling_window = 7;
};

/// Rolling MAPE (percent) over the trailing `window` entries with a non-zero
/// actual; one point per entry once at least one such entry exists.
inline std::vector<std::pair<Day, double>> rolling_mape(const PredictionTrace& t, std::size_t window) {
  std::vector<std::pair<Day, double>> out;
  for (std::size_t i = 0; i < t.entries.size(); ++i) {
    const std::size_t from = i + 1 >= window ? i + 1 - window : 0;
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t j = from; j <= i; ++j) {
      const auto& e = t.entries[j];
      if (e.actual == 0.0) continue;
      sum += std::fabs(e.actual - e.predicted) / std::fabs(e.actual);
      ++n;
    }
    if (n > 0) out.emplace_back(t.entries[i].date, 100.0 * sum / static_cast<double>(n));
  }
  return out;
}

namespace detail {

inline std::string svg_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

inline std::string coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace detail

/// Top panel: actual WiP. Below it one panel per source with its rolling
/// MAPE. Each panel holds exactly one polyline.
inline std::string render_svg(std::span<const PredictionTrace> traces, const ReportOptions& opt = {}) {
  if (traces.empty()) throw InvalidArgument("report needs at least one trace");
  constexpr double kWidth = 960, kLeft = 70, kRight = 20, kTopPanel = 220, kPanel = 120, kGap = 40, kHeader = 60;
  const double plot_w = kWidth - kLeft - kRight;
  const double height = kHeader + kTopPanel + static_cast<double>(traces.size()) * (kPanel + kGap) + kGap;

  // Shared x axis over every date seen.
  Day first = traces[0].entries.empty() ? Day{} : traces[0].entries.front().date;
  Day last = first;
  for (const auto& t : traces) {
    for (const auto& e : t.entries) {
      first = std::min(first, e.date);
      last = std::max(last, e.date);
    }
  }
  const double span_days = std::max(1.0, static_cast<double>((last - first).count()));
  const auto x_of = [&](Day d) { return kLeft + plot_w * static_cast<double>((d - first).count()) / span_days; };

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::coord(kWidth) + "\" height=\"" +
                    detail::coord(height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + detail::coord(kLeft) + "\" y=\"24\" font-size=\"16\">" + detail::svg_escape(opt.title) + "</text>\n";
  if (!opt.header_note.empty()) {
    svg += "<text x=\"" + detail::coord(kLeft) + "\" y=\"44\">" + detail::svg_escape(opt.header_note) + "</text>\n";
  }

  const auto panel = [&](double top, double h, const std::string& label,
                         const std::vector<std::pair<Day, double>>& pts, const char* color) {
    double lo = 0.0;
    double hi = 1.0;
    if (!pts.empty()) {
      lo = hi = pts.front().second;
      for (const auto& [d, v] : pts) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (hi - lo < 1e-12) hi = lo + 1.0;
    }
    std::string out = "<g>\n<rect x=\"" + detail::coord(kLeft) + "\" y=\"" + detail::coord(top) + "\" width=\"" +
                      detail::coord(plot_w) + "\" height=\"" + detail::coord(h) +
                      "\" fill=\"none\" stroke=\"#999\"/>\n";
    out += "<text x=\"" + detail::coord(kLeft) + "\" y=\"" + detail::coord(top - 6) + "\">" +
           detail::svg_escape(label) + "</text>\n";
    out += "<text x=\"" + detail::coord(kLeft - 6) + "\" y=\"" + detail::coord(top + 12) +
           "\" text-anchor=\"end\">" + detail::coord(hi) + "</text>\n";
    out += "<text x=\"" + detail::coord(kLeft - 6) + "\" y=\"" + detail::coord(top + h) + "\" text-anchor=\"end\">" +
           detail::coord(lo) + "</text>\n";
    out += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i) out.push_back(' ');
      out += detail::coord(x_of(pts[i].first)) + "," + detail::coord(top + h - h * (pts[i].second - lo) / (hi - lo));
    }
    out += "\"/>\n</g>\n";
    return out;
  };

  std::vector<std::pair<Day, double>> actual;
  for (const auto& e : traces[0].entries) actual.emplace_back(e.date, e.actual);
  double top = kHeader + 10;
  svg += panel(top, kTopPanel, "Actual WiP", actual, "#1f77b4");
  top += kTopPanel + kGap;
  for (const auto& t : traces) {
    svg += panel(top, kPanel,
                 std::string(to_string(t.source)) + ": rolling " + std::to_string(opt.rolling_window) + "-day MAPE (%)",
                 rolling_mape(t, opt.rolling_window), "#d62728");
    top += kPanel + kGap;
  }
  svg += "<text x=\"" + detail::coord(kLeft) + "\" y=\"" + detail::coord(height - 12) + "\">" + format_date(first) +
         "</text>\n";
  svg += "<text x=\"" + detail::coord(kWidth - kRight) + "\" y=\"" + detail::coord(height - 12) +
         "\" text-anchor=\"end\">" + format_date(last) + "</text>\n";
  svg += "</svg>\n";
  return svg;
}

/// Writes predictions.csv, metrics.csv and report.svg into `out_dir`
/// (created if needed) and returns their paths.
inline std::vector<std::filesystem::path> emit_report(std::span<const PredictionTrace> traces,
                                                      const std::filesystem::path& out_dir,
                                                      const ReportOptions& opt = {}) {
  if (traces.empty()) throw InvalidArgument("report needs at least one trace");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error("cannot create output directory '" + out_dir.string() + "': " + ec.message());
  const std::vector<std::filesystem::path> paths = {out_dir / "predictions.csv", out_dir / "metrics.csv",
                                                    out_dir / "report.svg"};
  write_text_file(paths[0], predictions_csv(traces));
  write_text_file(paths[1], metrics_csv(traces));
  write_text_file(paths[2], render_svg(traces, opt));
  return paths;
}

// ---------------------------------------------------------------------------
// Forecast run log: {date, final, mode, daily, weekday, windowed, trend_label, rationale}

inline nlohmann::json to_json(const ForecastReport& r) {
  return {{"date", format_date(r.date)},
          {"final", r.final_value},
          {"mode", to_string(r.mode)},
          {"daily", r.predictions[0].value},
          {"weekday", r.predictions[1].value},
          {"windowed", r.predictions[2].value},
          {"trend_label", to_string(r.trend.label)},
          {"rationale", r.rationale}};
}

}  // namespace wipcast
