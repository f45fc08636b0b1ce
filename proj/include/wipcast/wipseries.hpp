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

// Daily work-in-progress series derived from an event log.
//
// A case is active from its opening event (inclusive) to its closing event
// (exclusive). Each day carries the active count at day start (open), its
// intraday extremes (high/low), the count at day end (close), and the number
// of cases that opened (new), closed (done) or started that day, together
// with the calendar components day-of-week, day-of-month and day-of-year.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wipcast/csv.hpp"
#include "wipcast/error.hpp"
#include "wipcast/eventlog.hpp"
#include "wipcast/time.hpp"

namespace wipcast {

struct WipEvent {
  Day date;
  unsigned day_of_week = 1;  // ISO, Monday = 1
  unsigned day_of_month = 1;
  unsigned day_of_year = 1;
  std::int64_t open = 0;
  std::int64_t high = 0;
  std::int64_t low = 0;
  std::int64_t close = 0;
  std::int64_t new_cases = 0;
  std::int64_t done = 0;
  std::int64_t started = 0;

  friend bool operator==(const WipEvent&, const WipEvent&) = default;
};

/// Builds a WipEvent for `date`, filling the calendar components.
inline WipEvent make_wip_event(Day date, std::int64_t open, std::int64_t high, std::int64_t low,
                               std::int64_t close, std::int64_t new_cases, std::int64_t done,
                               std::int64_t started) {
  WipEvent ev;
  ev.date = date;
  ev.day_of_week = iso_weekday(date);
  ev.day_of_month = static_cast<unsigned>(std::chrono::year_month_day{date}.day());
  ev.day_of_year = day_of_year(date);
  ev.open = open;
  ev.high = high;
  ev.low = low;
  ev.close = close;
  ev.new_cases = new_cases;
  ev.done = done;
  ev.started = started;
  return ev;
}

/// Picks one event out of a case's time-ordered events.
struct EventSelector {
  enum class Pick { first, last };

  Pick pick = Pick::first;
  std::optional<std::string> activity;   // only events with this activity qualify
  std::optional<std::string> lifecycle;  // only events with this lifecycle value (case-insensitive)
  bool fallback_to_any = false;          // nothing qualifies -> pick among all events

  friend bool operator==(const EventSelector&, const EventSelector&) = default;
};

struct LifecycleConfig {
  EventSelector new_rule{EventSelector::Pick::first, std::nullopt, std::nullopt, false};
  EventSelector done_rule{EventSelector::Pick::last, std::nullopt, std::nullopt, false};
  EventSelector started_rule{EventSelector::Pick::first, std::nullopt, std::string("start"), true};
  /// Reporting timezone for day boundaries.
  UtcOffset timezone;

  friend bool operator==(const LifecycleConfig&, const LifecycleConfig&) = default;
};

enum class GapPolicy { carry, drop };

inline GapPolicy parse_gap_policy(std::string_view name) {
  if (name == "carry") return GapPolicy::carry;
  if (name == "drop") return GapPolicy::drop;
  throw ConfigError("unknown gap policy '" + std::string(name) + "' (expected carry or drop)");
}

inline std::string_view to_string(GapPolicy p) { return p == GapPolicy::carry ? "carry" : "drop"; }

/// One WipEvent per day, dates strictly increasing. Under the carry policy
/// the series is contiguous and open(d+1) == close(d) for every d.
struct WipSeries {
  std::vector<WipEvent> events;
  LifecycleConfig lifecycle_config;
  bool contiguous = true;
  std::vector<std::string> diagnostics;

  std::size_t size() const { return events.size(); }
  bool empty() const { return events.empty(); }

  /// Half-open index ranges [begin, end) of consecutive calendar days.
  std::vector<std::pair<std::size_t, std::size_t>> segments() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t begin = 0;
    for (std::size_t i = 1; i <= events.size(); ++i) {
      if (i == events.size() || events[i].date - events[i - 1].date != std::chrono::days{1}) {
        if (begin < i) out.emplace_back(begin, i);
        begin = i;
      }
    }
    return out;
  }

  /// Index of the entry dated `d`, if present.
  std::optional<std::size_t> index_of(Day d) const {
    auto it = std::lower_bound(events.begin(), events.end(), d,
                               [](const WipEvent& e, Day day) { return e.date < day; });
    if (it == events.end() || it->date != d) return std::nullopt;
    return static_cast<std::size_t>(it - events.begin());
  }
};

namespace detail {

inline bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

inline const Event* select_event(const std::vector<const Event*>& events, const EventSelector& sel) {
  const auto qualifies = [&](const Event* e) {
    if (sel.activity && e->activity != *sel.activity) return false;
    if (sel.lifecycle && !(e->lifecycle && iequals(*e->lifecycle, *sel.lifecycle))) return false;
    return true;
  };
  const auto pick = [&](auto pred) -> const Event* {
    if (sel.pick == EventSelector::Pick::first) {
      for (const Event* e : events)
        if (pred(e)) return e;
    } else {
      for (auto it = events.rbegin(); it != events.rend(); ++it)
        if (pred(*it)) return *it;
    }
    return nullptr;
  };
  if (const Event* e = pick(qualifies)) return e;
  if (sel.fallback_to_any) return pick([](const Event*) { return true; });
  return nullptr;
}

struct CaseSpan {
  std::string_view case_id;
  Timestamp opened;
  Timestamp closed;
  std::optional<Timestamp> started;
};

/// Applies the lifecycle rules to every case. Cases without an opening or
/// closing event, or closing before opening, are dropped with a diagnostic.
inline std::vector<CaseSpan> case_spans(const EventLog& log, const LifecycleConfig& cfg,
                                        std::vector<std::string>* diagnostics) {
  std::map<std::string_view, std::vector<const Event*>> by_case;
  for (const auto& ev : log.events()) by_case[ev.case_id].push_back(&ev);
  std::vector<CaseSpan> spans;
  spans.reserve(by_case.size());
  for (const auto& [id, events] : by_case) {
    const Event* opening = select_event(events, cfg.new_rule);
    const Event* closing = select_event(events, cfg.done_rule);
    if (!opening || !closing) {
      if (diagnostics)
        diagnostics->push_back("case '" + std::string(id) + "' dropped: no event matches the " +
                               (!opening ? "new" : "done") + " rule");
      continue;
    }
    if (closing->timestamp < opening->timestamp) {
      if (diagnostics)
        diagnostics->push_back("case '" + std::string(id) + "' dropped: done event precedes new event");
      continue;
    }
    CaseSpan span{id, opening->timestamp, closing->timestamp, std::nullopt};
    if (const Event* s = select_event(events, cfg.started_rule)) span.started = s->timestamp;
    spans.push_back(span);
  }
  return spans;
}

}  // namespace detail

/// Number of cases whose opening event is at or before `instant` and whose
/// closing event is after it.
inline std::int64_t active_count_at(const EventLog& log, const LifecycleConfig& cfg, Timestamp instant) {
  std::int64_t n = 0;
  for (const auto& span : detail::case_spans(log, cfg, nullptr)) {
    if (span.opened <= instant && instant < span.closed) ++n;
  }
  return n;
}

/// Inserts or flags days missing between consecutive entries. Under carry,
/// a missing day becomes a flat day at the previous close with zero counts;
/// under drop the series is kept as is and marked non-contiguous.
inline WipSeries fill_gaps(WipSeries series, GapPolicy policy) {
  for (std::size_t i = 1; i < series.events.size(); ++i) {
    if (series.events[i].date <= series.events[i - 1].date) {
      throw InvalidArgument("WiP series dates must be strictly increasing");
    }
  }
  if (policy == GapPolicy::drop) {
    series.contiguous = series.segments().size() <= 1;
    return series;
  }
  std::vector<WipEvent> filled;
  filled.reserve(series.events.size());
  for (const auto& ev : series.events) {
    if (!filled.empty()) {
      const auto prev = filled.back();
      for (Day d = prev.date + std::chrono::days{1}; d < ev.date; d += std::chrono::days{1}) {
        filled.push_back(make_wip_event(d, prev.close, prev.close, prev.close, prev.close, 0, 0, 0));
      }
    }
    filled.push_back(ev);
  }
  series.events = std::move(filled);
  series.contiguous = true;
  return series;
}

inline WipSeries fill_gaps(WipSeries series, std::string_view policy) {
  return fill_gaps(std::move(series), parse_gap_policy(policy));
}

/// Builds the daily series over every day that holds at least one log event,
/// then applies the gap policy to the days in between.
inline WipSeries build_wip_series(const EventLog& log, const LifecycleConfig& cfg = {},
                                  GapPolicy gap_policy = GapPolicy::carry) {
  if (log.empty()) throw EmptyLogError("cannot build a WiP series from an empty log");
  WipSeries series;
  series.lifecycle_config = cfg;
  const auto spans = detail::case_spans(log, cfg, &series.diagnostics);
  const UtcOffset tz = cfg.timezone;

  struct Boundary {
    Timestamp at;
    int delta;
  };
  std::vector<Boundary> boundaries;
  boundaries.reserve(spans.size() * 2);
  std::map<Day, std::int64_t> new_by_day, done_by_day, started_by_day;
  for (const auto& s : spans) {
    boundaries.push_back({s.opened, +1});
    boundaries.push_back({s.closed, -1});
    ++new_by_day[day_of(s.opened, tz)];
    ++done_by_day[day_of(s.closed, tz)];
    if (s.started) ++started_by_day[day_of(*s.started, tz)];
  }
  std::sort(boundaries.begin(), boundaries.end(),
            [](const Boundary& a, const Boundary& b) { return a.at < b.at; });

  std::vector<Day> event_days;
  for (const auto& ev : log.events()) {
    const Day d = day_of(ev.timestamp, tz);
    if (event_days.empty() || event_days.back() != d) event_days.push_back(d);
  }
  std::sort(event_days.begin(), event_days.end());
  event_days.erase(std::unique(event_days.begin(), event_days.end()), event_days.end());

  const auto lookup = [](const std::map<Day, std::int64_t>& m, Day d) -> std::int64_t {
    auto it = m.find(d);
    return it == m.end() ? 0 : it->second;
  };

  std::int64_t active = 0;
  std::size_t b = 0;
  for (const Day d : event_days) {
    const Timestamp start = day_start(d, tz);
    const Timestamp end = day_start(d + std::chrono::days{1}, tz);
    while (b < boundaries.size() && boundaries[b].at < start) active += boundaries[b++].delta;
    const std::int64_t open = active;
    std::int64_t high = open;
    std::int64_t low = open;
    // State is sampled once per distinct instant, after all its boundaries.
    while (b < boundaries.size() && boundaries[b].at < end) {
      const Timestamp at = boundaries[b].at;
      while (b < boundaries.size() && boundaries[b].at == at) active += boundaries[b++].delta;
      high = std::max(high, active);
      low = std::min(low, active);
    }
    series.events.push_back(make_wip_event(d, open, high, low, active, lookup(new_by_day, d),
                                           lookup(done_by_day, d), lookup(started_by_day, d)));
  }
  return fill_gaps(std::move(series), gap_policy);
}

// ---------------------------------------------------------------------------
// CSV contract between pipeline stages

inline constexpr std::string_view kWipCsvHeader = "date,dow,dom,doy,open,high,low,close,new,done,started";

inline std::string to_csv(const WipSeries& series) {
  std::string out(kWipCsvHeader);
  out.push_back('\n');
  for (const auto& e : series.events) {
    out += format_date(e.date);
    for (const std::int64_t v : {std::int64_t(e.day_of_week), std::int64_t(e.day_of_month),
                                 std::int64_t(e.day_of_year), e.open, e.high, e.low, e.close, e.new_cases,
                                 e.done, e.started}) {
      out.push_back(',');
      out += std::to_string(v);
    }
    out.push_back('\n');
  }
  return out;
}

inline WipSeries wip_series_from_csv(std::string_view text) {
  const auto records = csv::read(text);
  if (records.empty()) throw ParseError("WiP series CSV is empty");
  std::string header;
  for (std::size_t i = 0; i < records[0].fields.size(); ++i) {
    if (i) header.push_back(',');
    header += records[0].fields[i];
  }
  if (header != kWipCsvHeader) {
    throw ParseError("unexpected WiP series header '" + header + "'", records[0].line, 1);
  }
  WipSeries series;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& f = records[r].fields;
    if (f.size() != 11) throw ParseError("expected 11 fields", records[r].line, 1);
    std::int64_t v[10];
    for (int k = 0; k < 10; ++k) {
      const auto& s = f[k + 1];
      auto res = std::from_chars(s.data(), s.data() + s.size(), v[k]);
      if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || v[k] < 0) {
        throw ParseError("field '" + s + "' is not a non-negative integer", records[r].line, 1);
      }
    }
    WipEvent ev = make_wip_event(parse_date(f[0]), v[3], v[4], v[5], v[6], v[7], v[8], v[9]);
    if (ev.day_of_week != v[0] || ev.day_of_month != v[1] || ev.day_of_year != v[2]) {
      throw ParseError("calendar fields do not match date " + f[0], records[r].line, 1);
    }
    if (!series.events.empty() && ev.date <= series.events.back().date) {
      throw ParseError("dates must be strictly increasing", records[r].line, 1);
    }
    series.events.push_back(ev);
  }
  series.contiguous = series.segments().size() <= 1;
  return series;
}

}  // namespace wipcast
