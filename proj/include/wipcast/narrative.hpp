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

// Deterministic natural-language stories describing WiP days and windows.
//
// A query story describes what is known about a day (or a trailing window).
// A contextual story appends the realized next-day close and is the unit
// stored in process memory.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "wipcast/error.hpp"
#include "wipcast/time.hpp"
#include "wipcast/wipseries.hpp"

namespace wipcast {

enum class StoryKind { query, contextual };
enum class Granularity { daily, weekday, windowed };

inline constexpr Granularity kAllGranularities[] = {Granularity::daily, Granularity::weekday,
                                                    Granularity::windowed};

inline std::string_view to_string(StoryKind k) { return k == StoryKind::query ? "query" : "contextual"; }

inline std::string_view to_string(Granularity g) {
  switch (g) {
    case Granularity::daily: return "daily";
    case Granularity::weekday: return "weekday";
    case Granularity::windowed: return "windowed";
  }
  return "daily";
}

inline StoryKind parse_story_kind(std::string_view s) {
  if (s == "query") return StoryKind::query;
  if (s == "contextual") return StoryKind::contextual;
  throw ParseError("unknown story kind '" + std::string(s) + "'");
}

inline Granularity parse_granularity(std::string_view s) {
  if (s == "daily") return Granularity::daily;
  if (s == "weekday") return Granularity::weekday;
  if (s == "windowed") return Granularity::windowed;
  throw ParseError("unknown granularity '" + std::string(s) + "'");
}

struct Story {
  std::string text;
  StoryKind kind = StoryKind::query;
  Granularity granularity = Granularity::daily;
  Day date;                       // described day; last day of the window when windowed
  std::optional<double> target;   // next-day close, contextual stories only

  friend bool operator==(const Story&, const Story&) = default;
};

/// Integers print without decimals or separators; other values use the
/// shortest fixed-point form that round-trips.
inline std::string format_number(double x) {
  if (std::isfinite(x) && x == std::floor(x) && std::fabs(x) < 1e15) {
    return std::to_string(static_cast<long long>(x));
  }
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::fixed);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::string day_sentence(const WipEvent& ev) {
  return "WiP items opened at " + std::to_string(ev.open) + ", reached a high of " + std::to_string(ev.high) +
         " and a low of " + std::to_string(ev.low) + ", before closing at " + std::to_string(ev.close) +
         ", with " + std::to_string(ev.done) + " items completed, " + std::to_string(ev.new_cases) +
         " new items added, and " + std::to_string(ev.started) + " items started";
}

inline std::string contextual_suffix(double next_close) {
  return ", while the next WiP was expected to remain at " + format_number(next_close) + ".";
}

inline void require_day_granularity(Granularity g) {
  if (g == Granularity::windowed) {
    throw InvalidArgument("windowed stories are rendered from a window of days");
  }
}

}  // namespace detail

inline Story render_query_story(const WipEvent& ev, Granularity granularity = Granularity::daily) {
  detail::require_day_granularity(granularity);
  Story s;
  s.kind = StoryKind::query;
  s.granularity = granularity;
  s.date = ev.date;
  if (granularity == Granularity::weekday) {
    s.text = "On " + std::string(weekday_name(ev.day_of_week)) + ", the " + detail::day_sentence(ev) + ".";
  } else {
    s.text = "The " + detail::day_sentence(ev) + ".";
  }
  return s;
}

inline Story render_contextual_story(const WipEvent& ev, double next_close,
                                     Granularity granularity = Granularity::daily) {
  Story s = render_query_story(ev, granularity);
  s.text.pop_back();
  s.text += detail::contextual_suffix(next_close);
  s.kind = StoryKind::contextual;
  s.target = next_close;
  return s;
}

/// Aggregates a window: first open, lowest low, highest high, last close and
/// summed counts.
inline Story render_windowed_story(std::span<const WipEvent> window,
                                   std::optional<double> next_close = std::nullopt) {
  if (window.empty()) throw InvalidArgument("windowed story needs at least one day");
  std::int64_t low = window.front().low;
  std::int64_t high = window.front().high;
  std::int64_t done = 0;
  std::int64_t added = 0;
  std::int64_t started = 0;
  for (const auto& ev : window) {
    low = std::min(low, ev.low);
    high = std::max(high, ev.high);
    done += ev.done;
    added += ev.new_cases;
    started += ev.started;
  }
  Story s;
  s.granularity = Granularity::windowed;
  s.date = window.back().date;
  s.text = "Over the past " + std::to_string(window.size()) + " days, WiP opened at " +
           std::to_string(window.front().open) + ", ranged between a low of " + std::to_string(low) +
           " and a high of " + std::to_string(high) + ", and closed at " + std::to_string(window.back().close) +
           ", with " + std::to_string(done) + " items completed, " + std::to_string(added) +
           " new items added, and " + std::to_string(started) + " items started";
  if (next_close) {
    s.kind = StoryKind::contextual;
    s.target = next_close;
    s.text += detail::contextual_suffix(*next_close);
  } else {
    s.kind = StoryKind::query;
    s.text += ".";
  }
  return s;
}

/// Renders the story for series day `i` at `granularity`. Windowed stories
/// cover the trailing `window` days ending at `i` (fewer near the start).
inline Story render_series_story(const WipSeries& series, std::size_t i, Granularity granularity,
                                 std::optional<double> next_close, std::size_t window = 7) {
  if (i >= series.events.size()) throw InvalidArgument("story day index out of range");
  if (granularity == Granularity::windowed) {
    const std::size_t n = std::min(window, i + 1);
    return render_windowed_story(std::span<const WipEvent>(series.events).subspan(i + 1 - n, n), next_close);
  }
  return next_close ? render_contextual_story(series.events[i], *next_close, granularity)
                    : render_query_story(series.events[i], granularity);
}

// ---------------------------------------------------------------------------
// Extraction

/// Numbers recovered from a rendered story.
struct StoryFacts {
  Granularity granularity = Granularity::daily;
  std::optional<unsigned> weekday;       // ISO weekday, weekday stories
  std::optional<std::int64_t> window_days;
  double open = 0;
  double high = 0;
  double low = 0;
  double close = 0;
  double done = 0;
  double new_cases = 0;
  double started = 0;
  std::optional<double> target;
};

/// Inverse of the renderers: returns the numbers a story was built from, or
/// nothing when `text` is not in one of the story forms.
inline std::optional<StoryFacts> extract_story_facts(std::string_view text) {
  static const std::string num = R"((-?\d+(?:\.\d+)?))";
  static const std::string tail = ", with " + num + " items completed, " + num + " new items added, and " + num +
                                  " items started(?:, while the next WiP was expected to remain at " + num +
                                  R"()?\.)";
  static const std::regex day_re("^(?:On (Monday|Tuesday|Wednesday|Thursday|Friday|Saturday|Sunday), the|The) "
                                 "WiP items opened at " +
                                 num + ", reached a high of " + num + " and a low of " + num +
                                 ", before closing at " + num + tail + "$");
  static const std::regex window_re(R"(^Over the past (\d+) days, WiP opened at )" + num +
                                    ", ranged between a low of " + num + " and a high of " + num +
                                    ", and closed at " + num + tail + "$");
  const auto to_d = [](const std::ssub_match& m) { return std::stod(m.str()); };
  std::smatch m;
  const std::string s(text);
  StoryFacts f;
  std::size_t t0 = 0;
  if (std::regex_match(s, m, day_re)) {
    if (m[1].matched) {
      f.granularity = Granularity::weekday;
      static constexpr std::string_view names[] = {"Monday", "Tuesday",  "Wednesday", "Thursday",
                                                   "Friday", "Saturday", "Sunday"};
      for (unsigned k = 0; k < 7; ++k)
        if (m[1].str() == names[k]) f.weekday = k + 1;
    }
    f.open = to_d(m[2]);
    f.high = to_d(m[3]);
    f.low = to_d(m[4]);
    f.close = to_d(m[5]);
    t0 = 6;
  } else if (std::regex_match(s, m, window_re)) {
    f.granularity = Granularity::windowed;
    f.window_days = std::stoll(m[1].str());
    f.open = to_d(m[2]);
    f.low = to_d(m[3]);
    f.high = to_d(m[4]);
    f.close = to_d(m[5]);
    t0 = 6;
  } else {
    return std::nullopt;
  }
  f.done = to_d(m[t0]);
  f.new_cases = to_d(m[t0 + 1]);
  f.started = to_d(m[t0 + 2]);
  if (m[t0 + 3].matched) f.target = to_d(m[t0 + 3]);
  return f;
}

// ---------------------------------------------------------------------------
// JSON-lines corpus: {date, kind, granularity, text, target}

inline nlohmann::json to_json(const Story& s) {
  nlohmann::json j;
  j["date"] = format_date(s.date);
  j["kind"] = to_string(s.kind);
  j["granularity"] = to_string(s.granularity);
  j["text"] = s.text;
  j["target"] = s.target ? nlohmann::json(*s.target) : nlohmann::json(nullptr);
  return j;
}

inline Story story_from_json(const nlohmann::json& j) {
  Story s;
  s.date = parse_date(j.at("date").get<std::string>());
  s.kind = parse_story_kind(j.at("kind").get<std::string>());
  s.granularity = parse_granularity(j.at("granularity").get<std::string>());
  s.text = j.at("text").get<std::string>();
  if (j.contains("target") && !j["target"].is_null()) s.target = j["target"].get<double>();
  if (s.kind == StoryKind::contextual && !s.target) {
    throw ParseError("contextual story dated " + format_date(s.date) + " has no target");
  }
  return s;
}

inline std::string to_jsonl(std::span<const Story> stories) {
  std::string out;
  for (const auto& s : stories) {
    out += to_json(s).dump();
    out.push_back('\n');
  }
  return out;
}

inline std::vector<Story> stories_from_jsonl(std::string_view text) {
  std::vector<Story> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back(story_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad story record: ") + e.what(), line_no, 1);
    }
  }
  return out;
}

/// Query and contextual stories for every day of `series` at `granularity`.
/// Contextual stories exist only where the next calendar day is present;
/// windowed stories start once a full window is available.
inline std::vector<Story> render_corpus(const WipSeries& series, Granularity granularity, std::size_t window = 7) {
  std::vector<Story> out;
  const auto& ev = series.events;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    if (granularity == Granularity::windowed) {
      if (i + 1 < window) continue;
      if (ev[i].date - ev[i + 1 - window].date != std::chrono::days{static_cast<int>(window) - 1}) continue;
    }
    out.push_back(render_series_story(series, i, granularity, std::nullopt, window));
    if (i + 1 < ev.size() && ev[i + 1].date - ev[i].date == std::chrono::days{1}) {
      out.push_back(render_series_story(series, i, granularity, static_cast<double>(ev[i + 1].close), window));
    }
  }
  return out;
}

}  // namespace wipcast
