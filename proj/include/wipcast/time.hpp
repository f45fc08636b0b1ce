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

// Timestamps, calendar days and fixed UTC offsets.
//
// All instants are held in UTC with microsecond resolution. Day bucketing is
// done in a reporting timezone expressed as a fixed offset from UTC.

#include <array>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "wipcast/error.hpp"

namespace wipcast {

using Timestamp = std::chrono::sys_time<std::chrono::microseconds>;
using Day = std::chrono::sys_days;

class UtcOffset {
 public:
  constexpr UtcOffset() = default;
  constexpr explicit UtcOffset(std::chrono::minutes m) : minutes_(m) {}

  constexpr std::chrono::minutes minutes() const { return minutes_; }

  /// Accepts "UTC", "Z", "+HH:MM", "-HH:MM", "+HHMM", "+HH", "UTC+HH:MM".
  static UtcOffset parse(std::string_view text);

  std::string to_string() const {
    if (minutes_.count() == 0) return "UTC";
    const auto total = minutes_.count();
    const auto mag = total < 0 ? -total : total;
    char buf[16];
    std::snprintf(buf, sizeof buf, "%c%02d:%02d", total < 0 ? '-' : '+',
                  static_cast<int>(mag / 60), static_cast<int>(mag % 60));
    return buf;
  }

  friend constexpr bool operator==(UtcOffset, UtcOffset) = default;

 private:
  std::chrono::minutes minutes_{0};
};

namespace detail {

class Cursor {
 public:
  explicit Cursor(std::string_view s) : s_(s) {}

  bool done() const { return pos_ >= s_.size(); }
  char peek() const { return done() ? '\0' : s_[pos_]; }
  std::size_t pos() const { return pos_; }
  void advance() { ++pos_; }

  bool accept(char c) {
    if (peek() != c) return false;
    ++pos_;
    return true;
  }

  // Reads exactly n digits (or between min_n and max_n when they differ).
  bool digits(int min_n, int max_n, int& out) {
    int value = 0;
    int n = 0;
    while (n < max_n && !done() && s_[pos_] >= '0' && s_[pos_] <= '9') {
      value = value * 10 + (s_[pos_] - '0');
      ++pos_;
      ++n;
    }
    if (n < min_n) return false;
    out = value;
    return true;
  }

  // Fraction digits after a '.' or ','; returns microseconds (truncated).
  bool fraction(std::int64_t& micros) {
    if (!(accept('.') || accept(','))) return false;
    std::int64_t value = 0;
    int n = 0;
    while (!done() && s_[pos_] >= '0' && s_[pos_] <= '9') {
      if (n < 6) value = value * 10 + (s_[pos_] - '0');
      ++pos_;
      ++n;
    }
    if (n == 0) return false;
    for (int i = n; i < 6; ++i) value *= 10;
    micros = value;
    return true;
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

inline bool parse_offset(Cursor& c, std::chrono::minutes& out) {
  if (c.accept('Z') || c.accept('z')) {
    out = std::chrono::minutes{0};
    return true;
  }
  int sign = 0;
  if (c.accept('+')) {
    sign = 1;
  } else if (c.accept('-')) {
    sign = -1;
  } else {
    return false;
  }
  int hh = 0;
  int mm = 0;
  if (!c.digits(2, 2, hh)) return false;
  if (c.accept(':')) {
    if (!c.digits(2, 2, mm)) return false;
  } else {
    c.digits(2, 2, mm);  // optional "HHMM"
  }
  if (hh > 23 || mm > 59) return false;
  out = std::chrono::minutes{sign * (hh * 60 + mm)};
  return true;
}

struct Fields {
  int year = 1970;
  int month = 1;
  int day = 1;
  int hour = 0;
  int minute = 0;
  int second = 0;
  std::int64_t micros = 0;
  bool has_offset = false;
  std::chrono::minutes offset{0};
};

inline Timestamp assemble(const Fields& f, UtcOffset default_offset, std::string_view text) {
  using namespace std::chrono;
  const year_month_day ymd{year{f.year}, month{static_cast<unsigned>(f.month)},
                           std::chrono::day{static_cast<unsigned>(f.day)}};
  if (!ymd.ok() || f.hour > 23 || f.minute > 59 || f.second > 60) {
    throw ParseError("timestamp out of range: '" + std::string(text) + "'");
  }
  const auto offset = f.has_offset ? f.offset : default_offset.minutes();
  Timestamp local = time_point_cast<microseconds>(sys_days{ymd}) + hours{f.hour} +
                    minutes{f.minute} + seconds{f.second} + microseconds{f.micros};
  return local - offset;
}

}  // namespace detail

inline UtcOffset UtcOffset::parse(std::string_view text) {
  std::string_view t = text;
  if (t == "UTC" || t == "utc" || t == "Z" || t == "GMT" || t.empty()) return UtcOffset{};
  if (t.substr(0, 3) == "UTC" || t.substr(0, 3) == "GMT") t.remove_prefix(3);
  detail::Cursor c(t);
  std::chrono::minutes m{0};
  if (!detail::parse_offset(c, m)) {
    // Bare "+HH" handled by parse_offset; anything else is unsupported.
    throw ConfigError("unsupported timezone '" + std::string(text) +
                      "' (expected UTC or a fixed offset such as +01:00)");
  }
  if (!c.done()) throw ConfigError("trailing characters in timezone '" + std::string(text) + "'");
  return UtcOffset{m};
}

/// Parses ISO-8601 / RFC-3339 style instants: "YYYY-MM-DD",
/// "YYYY-MM-DD[T ]HH:MM[:SS[.f+]][Z|+HH:MM|+HHMM]". Without an explicit
/// offset the text is interpreted in `default_offset`.
inline Timestamp parse_iso8601(std::string_view text, UtcOffset default_offset = {}) {
  detail::Cursor c(text);
  detail::Fields f;
  const auto fail = [&]() -> Timestamp {
    throw ParseError("unparseable timestamp: '" + std::string(text) + "'");
  };
  if (!c.digits(4, 4, f.year) || !c.accept('-') || !c.digits(2, 2, f.month) || !c.accept('-') ||
      !c.digits(2, 2, f.day)) {
    return fail();
  }
  if (c.accept('T') || c.accept('t') || c.accept(' ')) {
    if (!c.digits(2, 2, f.hour) || !c.accept(':') || !c.digits(2, 2, f.minute)) return fail();
    if (c.accept(':')) {
      if (!c.digits(2, 2, f.second)) return fail();
      if (c.peek() == '.' || c.peek() == ',') {
        if (!c.fraction(f.micros)) return fail();
      }
    }
    if (!c.done()) {
      if (!detail::parse_offset(c, f.offset)) return fail();
      f.has_offset = true;
    }
  }
  if (!c.done()) return fail();
  return detail::assemble(f, default_offset, text);
}

/// strftime-like parsing. Supported: %Y %m %d %H %M %S (with optional
/// fraction) %f %z %F %T %%. Any other character must match literally.
/// The special format "iso8601" (or an empty format) delegates to
/// parse_iso8601.
inline Timestamp parse_with_format(std::string_view text, std::string_view format,
                                   UtcOffset default_offset = {}) {
  if (format.empty() || format == "iso8601" || format == "ISO8601") {
    return parse_iso8601(text, default_offset);
  }
  detail::Cursor c(text);
  detail::Fields f;
  const auto fail = [&]() -> Timestamp {
    throw ParseError("timestamp '" + std::string(text) + "' does not match format '" +
                     std::string(format) + "'");
  };
  for (std::size_t i = 0; i < format.size(); ++i) {
    const char fc = format[i];
    if (fc != '%') {
      if (!c.accept(fc)) return fail();
      continue;
    }
    if (++i >= format.size()) throw ConfigError("dangling '%' in timestamp format");
    bool ok = true;
    switch (format[i]) {
      case 'Y': ok = c.digits(4, 4, f.year); break;
      case 'm': ok = c.digits(1, 2, f.month); break;
      case 'd': ok = c.digits(1, 2, f.day); break;
      case 'H': ok = c.digits(1, 2, f.hour); break;
      case 'M': ok = c.digits(2, 2, f.minute); break;
      case 'S':
        ok = c.digits(2, 2, f.second);
        if (ok && (c.peek() == '.' || c.peek() == ',')) ok = c.fraction(f.micros);
        break;
      case 'f': {
        std::int64_t value = 0;
        int n = 0;
        while (!c.done() && c.peek() >= '0' && c.peek() <= '9') {
          if (n < 6) value = value * 10 + (c.peek() - '0');
          c.advance();
          ++n;
        }
        for (int k = n; k < 6; ++k) value *= 10;
        f.micros = value;
        ok = n > 0;
        break;
      }
      case 'z':
        ok = detail::parse_offset(c, f.offset);
        f.has_offset = ok;
        break;
      case 'F':
        ok = c.digits(4, 4, f.year) && c.accept('-') && c.digits(1, 2, f.month) && c.accept('-') &&
             c.digits(1, 2, f.day);
        break;
      case 'T':
        ok = c.digits(1, 2, f.hour) && c.accept(':') && c.digits(2, 2, f.minute) && c.accept(':') &&
             c.digits(2, 2, f.second);
        if (ok && (c.peek() == '.' || c.peek() == ',')) ok = c.fraction(f.micros);
        break;
      case '%': ok = c.accept('%'); break;
      default:
        throw ConfigError(std::string("unsupported timestamp format directive %") + format[i]);
    }
    if (!ok) return fail();
  }
  if (!c.done()) return fail();
  return detail::assemble(f, default_offset, text);
}

/// Canonical UTC rendering: "YYYY-MM-DDTHH:MM:SS[.ffffff]Z".
inline std::string format_iso8601(Timestamp ts) {
  using namespace std::chrono;
  const auto day = floor<days>(ts);
  const year_month_day ymd{day};
  auto rest = ts - day;
  const auto h = duration_cast<hours>(rest);
  rest -= h;
  const auto m = duration_cast<minutes>(rest);
  rest -= m;
  const auto s = duration_cast<seconds>(rest);
  rest -= s;
  char buf[48];
  int n = std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d", static_cast<int>(ymd.year()),
                        static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                        static_cast<int>(h.count()), static_cast<int>(m.count()),
                        static_cast<int>(s.count()));
  if (rest.count() != 0) {
    n += std::snprintf(buf + n, sizeof buf - n, ".%06lld", static_cast<long long>(rest.count()));
  }
  std::snprintf(buf + n, sizeof buf - n, "Z");
  return buf;
}

inline std::string format_date(Day d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

inline Day parse_date(std::string_view text) {
  detail::Cursor c(text);
  int y = 0;
  int m = 0;
  int d = 0;
  if (!c.digits(4, 4, y) || !c.accept('-') || !c.digits(2, 2, m) || !c.accept('-') ||
      !c.digits(2, 2, d) || !c.done()) {
    throw ParseError("invalid date '" + std::string(text) + "' (expected YYYY-MM-DD)");
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) throw ParseError("invalid calendar date '" + std::string(text) + "'");
  return Day{ymd};
}

/// Calendar day containing `ts` in the reporting timezone.
inline Day day_of(Timestamp ts, UtcOffset tz = {}) {
  return std::chrono::floor<std::chrono::days>(ts + tz.minutes());
}

/// First instant of `day` in the reporting timezone, expressed in UTC.
inline Timestamp day_start(Day day, UtcOffset tz = {}) {
  return std::chrono::time_point_cast<std::chrono::microseconds>(day) - tz.minutes();
}

/// ISO weekday, Monday = 1 ... Sunday = 7.
inline unsigned iso_weekday(Day d) { return std::chrono::weekday{d}.iso_encoding(); }

inline unsigned day_of_year(Day d) {
  const std::chrono::year_month_day ymd{d};
  const Day jan1{ymd.year() / std::chrono::January / 1};
  return static_cast<unsigned>((d - jan1).count()) + 1;
}

inline std::string_view weekday_name(unsigned iso) {
  static constexpr std::array<std::string_view, 7> kNames = {
      "Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday"};
  if (iso < 1 || iso > 7) throw InvalidArgument("weekday out of range");
  return kNames[iso - 1];
}

}  // namespace wipcast
