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

// Walk-forward evaluation: the memory grows one day at a time and every
// forecast sees only stories whose outcome was already observed.

#include <algorithm>
#include <array>
#include <cmath>
#include <future>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wipcast/agents.hpp"
#include "wipcast/error.hpp"
#include "wipcast/memory.hpp"
#include "wipcast/narrative.hpp"
#include "wipcast/wipseries.hpp"

namespace wipcast {

enum class Source { multi_agent, daily_only, weekday_only, windowed_only, persistence };

inline constexpr Source kAllSources[] = {Source::multi_agent, Source::daily_only, Source::weekday_only,
                                         Source::windowed_only, Source::persistence};

inline std::string_view to_string(Source s) {
  switch (s) {
    case Source::multi_agent: return "multi_agent";
    case Source::daily_only: return "daily_only";
    case Source::weekday_only: return "weekday_only";
    case Source::windowed_only: return "windowed_only";
    case Source::persistence: return "persistence";
  }
  return "multi_agent";
}

inline Source parse_source(std::string_view s) {
  for (auto src : kAllSources)
    if (to_string(src) == s) return src;
  throw ParseError("unknown prediction source '" + std::string(s) + "'");
}

struct TraceEntry {
  Day date;
  double actual = 0.0;
  double predicted = 0.0;

  friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

/// Predictions of one source, dates strictly increasing.
struct PredictionTrace {
  Source source = Source::multi_agent;
  std::vector<TraceEntry> entries;

  friend bool operator==(const PredictionTrace&, const PredictionTrace&) = default;
};

struct MetricsSummary {
  double mape = 0.0;  // percent
  double mae = 0.0;
  std::size_t n = 0;
  std::size_t skipped_zero_actuals = 0;
};

struct MapeResult {
  double mape = 0.0;
  std::size_t used = 0;
  std::size_t skipped_zero_actuals = 0;
};

/// 100 * mean |actual - predicted| / |actual| over entries with a non-zero
/// actual. Zero actuals are excluded and counted.
inline MapeResult mape(const PredictionTrace& trace) {
  if (trace.entries.empty()) throw InvalidArgument("MAPE of an empty trace");
  MapeResult r;
  double sum = 0.0;
  for (const auto& e : trace.entries) {
    if (e.actual == 0.0) {
      ++r.skipped_zero_actuals;
      continue;
    }
    sum += std::fabs(e.actual - e.predicted) / std::fabs(e.actual);
    ++r.used;
  }
  if (r.used == 0) throw InvalidArgument("MAPE undefined: every actual is zero");
  r.mape = 100.0 * sum / static_cast<double>(r.used);
  return r;
}

inline double mae(const PredictionTrace& trace) {
  if (trace.entries.empty()) throw InvalidArgument("MAE of an empty trace");
  double sum = 0.0;
  for (const auto& e : trace.entries) sum += std::fabs(e.actual - e.predicted);
  return sum / static_cast<double>(trace.entries.size());
}

inline MetricsSummary summarize(const PredictionTrace& trace) {
  const auto m = mape(trace);
  return MetricsSummary{m.mape, mae(trace), trace.entries.size(), m.skipped_zero_actuals};
}

// ---------------------------------------------------------------------------
// Split

/// Last training day when the final `test_fraction` of days is held out
/// (at least one test day).
inline Day default_split_date(const WipSeries& series, double test_fraction = 0.2) {
  if (series.events.size() < 2) throw InvalidArgument("series too short to split");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test fraction must be in (0, 1)");
  const auto n = series.events.size();
  const auto test = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n))), 1, n - 1);
  return series.events[n - test - 1].date;
}

namespace detail {

/// Test-day indices: after the split, with the previous calendar day present.
inline std::vector<std::size_t> test_days(const WipSeries& series, Day split_date, std::size_t min_train_days) {
  const auto& ev = series.events;
  if (ev.empty()) throw InvalidArgument("empty series");
  if (split_date < ev.front().date || split_date >= ev.back().date) {
    throw InvalidArgument("split date " + format_date(split_date) + " must lie inside the series and before its last day");
  }
  const auto train = static_cast<std::size_t>(
      std::count_if(ev.begin(), ev.end(), [&](const WipEvent& e) { return e.date <= split_date; }));
  if (train < min_train_days) {
    throw InvalidArgument("split leaves " + std::to_string(train) + " training days; at least " +
                          std::to_string(min_train_days) + " are required");
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 1; i < ev.size(); ++i) {
    if (ev[i].date > split_date && ev[i].date - ev[i - 1].date == std::chrono::days{1}) out.push_back(i);
  }
  if (out.empty()) throw InvalidArgument("split leaves no test days");
  return out;
}

inline bool has_next_day(const WipSeries& s, std::size_t j) {
  return j + 1 < s.events.size() && s.events[j + 1].date - s.events[j].date == std::chrono::days{1};
}

inline bool has_full_window(const WipSeries& s, std::size_t j, std::size_t window) {
  return j + 1 >= window &&
         s.events[j].date - s.events[j + 1 - window].date == std::chrono::days{static_cast<int>(window) - 1};
}

}  // namespace detail

/// Persistence forecast: predicted(d) = close(d - 1).
inline PredictionTrace persistence_baseline(const WipSeries& series, Day split_date, std::size_t min_train_days = 14) {
  PredictionTrace t;
  t.source = Source::persistence;
  for (const std::size_t i : detail::test_days(series, split_date, min_train_days)) {
    t.entries.push_back({series.events[i].date, static_cast<double>(series.events[i].close),
                         static_cast<double>(series.events[i - 1].close)});
  }
  return t;
}

struct EvalOptions {
  std::optional<Day> split_date;  // default: hold out test_fraction
  double test_fraction = 0.2;
  std::size_t story_window = 7;
  std::size_t k = 5;
  RetentionPolicy retention;
  TrendConfig trend;
  FusionOptions fusion;
  bool parallel_agents = true;
};

/// What the memory looked like when day `date` was forecast.
struct StepAudit {
  Day date;
  std::array<std::size_t, 3> corpus_sizes{};    // per granularity
  std::optional<Day> latest_story;              // across all three indexes
  std::optional<Day> latest_retrieved;          // across all predictions
};

struct RollingResult {
  Day split_date;
  std::vector<PredictionTrace> traces;  // multi_agent, daily_only, weekday_only, windowed_only
  std::vector<ForecastReport> reports;
  std::vector<StepAudit> audit;
};

/// Walk-forward forecast of every test day. Before forecasting day d the
/// memories hold the contextual stories of all days up to d - 2: the story
/// of day d - 1 would carry close(d), the value being forecast.
inline RollingResult rolling_forecast(const WipSeries& series, const EvalOptions& opt,
                                      std::shared_ptr<const EmbeddingProvider> embedder, ChatBackend& backend) {
  RollingResult result;
  result.split_date = opt.split_date ? *opt.split_date : default_split_date(series, opt.test_fraction);
  const auto days = detail::test_days(series, result.split_date, std::max<std::size_t>(opt.trend.lookback, 1));
  const auto& ev = series.events;

  std::array<std::unique_ptr<ProcessMemory>, 3> memories;
  std::array<std::unique_ptr<PredictorAgent>, 3> agents;
  for (const auto g : kAllGranularities) {
    const auto i = static_cast<std::size_t>(g);
    memories[i] = std::make_unique<ProcessMemory>(embedder, g, opt.retention);
    agents[i] = std::make_unique<PredictorAgent>(g, *memories[i], backend, PredictorOptions{opt.k, opt.story_window});
  }

  // Adds contextual stories for days [next, last] whose next day is known.
  std::size_t next_story_day = 0;
  const auto grow_memory = [&](std::size_t last) {
    std::array<std::vector<Story>, 3> batch;
    for (; next_story_day <= last && next_story_day + 1 < ev.size(); ++next_story_day) {
      const std::size_t j = next_story_day;
      if (!detail::has_next_day(series, j)) continue;
      const double target = static_cast<double>(ev[j + 1].close);
      for (const auto g : kAllGranularities) {
        if (g == Granularity::windowed && !detail::has_full_window(series, j, opt.story_window)) continue;
        batch[static_cast<std::size_t>(g)].push_back(render_series_story(series, j, g, target, opt.story_window));
      }
    }
    for (std::size_t g = 0; g < 3; ++g) {
      constexpr std::size_t kChunk = 64;
      for (std::size_t b = 0; b < batch[g].size(); b += kChunk) {
        const auto n = std::min(kChunk, batch[g].size() - b);
        memories[g]->add_batch(std::span<const Story>(batch[g]).subspan(b, n));
      }
    }
  };

  for (const auto s : {Source::multi_agent, Source::daily_only, Source::weekday_only, Source::windowed_only}) {
    result.traces.push_back(PredictionTrace{s, {}});
  }

  for (const std::size_t i : days) {
    const Day date = ev[i].date;
    if (i >= 2) grow_memory(i - 2);
    const std::span<const WipEvent> history(ev.data(), i);

    StepAudit audit;
    audit.date = date;
    for (std::size_t g = 0; g < 3; ++g) {
      audit.corpus_sizes[g] = memories[g]->index().size();
      if (auto d = memories[g]->index().latest_date(); d && (!audit.latest_story || *d > *audit.latest_story)) {
        audit.latest_story = d;
      }
    }

    // One retrieval per agent; the single-agent traces reuse the same
    // predictions the fusion agent sees.
    std::array<Prediction, 3> preds;
    const auto run_agent = [&](std::size_t g) { return agents[g]->predict(history, date); };
    if (opt.parallel_agents) {
      std::array<std::future<Prediction>, 3> futures;
      for (std::size_t g = 0; g < 3; ++g) futures[g] = std::async(std::launch::async, run_agent, g);
      for (std::size_t g = 0; g < 3; ++g) preds[g] = futures[g].get();
    } else {
      for (std::size_t g = 0; g < 3; ++g) preds[g] = run_agent(g);
    }
    for (const auto& p : preds) {
      for (const auto& r : p.retrieved) {
        const Day d = r.document->story.date;
        if (!audit.latest_retrieved || d > *audit.latest_retrieved) audit.latest_retrieved = d;
      }
    }

    std::vector<double> closes;
    closes.reserve(history.size());
    for (const auto& e : history) closes.push_back(static_cast<double>(e.close));
    const TrendInsight trend = trend_analyze(closes, opt.trend);
    ForecastReport report = fuse(date, preds, trend, memories[0].get(), &backend, opt.fusion);

    const double actual = static_cast<double>(ev[i].close);
    result.traces[0].entries.push_back({date, actual, report.final_value});
    for (std::size_t g = 0; g < 3; ++g) result.traces[g + 1].entries.push_back({date, actual, preds[g].value});
    result.reports.push_back(std::move(report));
    result.audit.push_back(audit);
  }
  return result;
}

}  // namespace wipcast
