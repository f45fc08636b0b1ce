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

// Generators and helpers shared by the test binaries.

#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "wipcast/wipcast.hpp"

namespace wipcast::testing {

inline std::string fixture(const std::string& name) { return read_text_file(std::string(WIPCAST_FIXTURES) + "/" + name); }

inline Day day(int y, unsigned m, unsigned d) {
  return std::chrono::sys_days{std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{d}};
}

/// The worked example day: open 55, high 70, low 55, close 66, done 10,
/// new 24, started 21, placed on a Monday.
inline WipEvent example_day() { return make_wip_event(day(2024, 1, 1), 55, 70, 55, 66, 24, 10, 21); }

/// Random event log: every case has one opening and one closing event and
/// optionally some activity in between, spread over `days` days.
inline EventLog random_log(std::mt19937_64& rng, int cases, int days, Day first = day(2023, 5, 1)) {
  std::uniform_int_distribution<int> minute(0, days * 24 * 60 - 1);
  std::uniform_int_distribution<int> duration(0, 3 * 24 * 60);
  std::uniform_int_distribution<int> extra(0, 2);
  std::vector<Event> events;
  const Timestamp base = std::chrono::time_point_cast<std::chrono::microseconds>(first);
  for (int c = 0; c < cases; ++c) {
    const auto open = base + std::chrono::minutes{minute(rng)};
    const auto close = open + std::chrono::minutes{duration(rng)};
    const std::string id = "case" + std::to_string(c);
    events.push_back(Event{id, "Register", open, std::string("start"), {}});
    const int n = extra(rng);
    for (int k = 0; k < n; ++k) {
      const auto span = std::chrono::duration_cast<std::chrono::minutes>(close - open).count();
      std::uniform_int_distribution<long long> at(0, span);
      events.push_back(Event{id, "Work", open + std::chrono::minutes{at(rng)}, std::string("complete"), {}});
    }
    events.push_back(Event{id, "Close", close, std::string("complete"), {}});
  }
  return EventLog(std::move(events), SourceMeta{"random", "memory", 0, 0, {}});
}

/// Contiguous synthetic series: a bounded random walk with consistent OHLC
/// and counts (close = open + new - done).
inline WipSeries synthetic_series(std::size_t n, std::uint64_t seed, Day first = day(2024, 1, 1)) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> flow(0, 12);
  WipSeries s;
  std::int64_t level = 40;
  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t added = flow(rng);
    const std::int64_t done = std::min<std::int64_t>(level + added, flow(rng));
    const std::int64_t open = level;
    const std::int64_t close = open + added - done;
    const std::int64_t high = std::max(open, close) + flow(rng) / 4;
    const std::int64_t low = std::max<std::int64_t>(0, std::min(open, close) - flow(rng) / 4);
    s.events.push_back(make_wip_event(first + std::chrono::days{static_cast<int>(i)}, open, high, low, close, added,
                                      done, added));
    level = close;
  }
  return s;
}

inline WipSeries series_from_closes(const std::vector<std::int64_t>& closes, Day first = day(2024, 1, 1)) {
  WipSeries s;
  std::int64_t prev = closes.empty() ? 0 : closes.front();
  for (std::size_t i = 0; i < closes.size(); ++i) {
    const auto c = closes[i];
    s.events.push_back(make_wip_event(first + std::chrono::days{static_cast<int>(i)}, prev, std::max(prev, c),
                                      std::min(prev, c), c, 0, 0, 0));
    prev = c;
  }
  return s;
}

inline std::string temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("wipcast_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

}  // namespace wipcast::testing
