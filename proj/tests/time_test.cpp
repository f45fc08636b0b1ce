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

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace wipcast {
namespace {

using testing::day;
using namespace std::chrono;

TEST(Time, ParsesIsoWithOffsets) {
  const auto a = parse_iso8601("2024-03-04T09:00:00.000+01:00");
  const auto b = parse_iso8601("2024-03-04T08:00:00Z");
  EXPECT_EQ(a, b);
  EXPECT_EQ(parse_iso8601("2024-03-04 08:00:00"), b);
  EXPECT_EQ(parse_iso8601("2024-03-04T10:30:00+0230"), b);
  EXPECT_EQ(parse_iso8601("2024-03-04T08:00:00.25Z") - b, milliseconds{250});
}

TEST(Time, DefaultOffsetAppliesWithoutExplicitZone) {
  const auto local = parse_iso8601("2024-03-04T09:00:00", UtcOffset::parse("+01:00"));
  EXPECT_EQ(local, parse_iso8601("2024-03-04T08:00:00Z"));
  EXPECT_EQ(parse_iso8601("2024-03-04T09:00:00Z", UtcOffset::parse("+01:00")), parse_iso8601("2024-03-04T09:00:00Z"));
}

TEST(Time, RejectsMalformed) {
  EXPECT_THROW(parse_iso8601("2024-13-01T00:00:00Z"), ParseError);
  EXPECT_THROW(parse_iso8601("2024-02-30"), ParseError);
  EXPECT_THROW(parse_iso8601("yesterday"), ParseError);
  EXPECT_THROW(parse_iso8601("2024-01-01T25:00:00Z"), ParseError);
  EXPECT_THROW(UtcOffset::parse("+25:00"), ConfigError);
}

TEST(Time, CustomFormat) {
  const auto t = parse_with_format("04/03/2024 08:00:05", "%d/%m/%Y %H:%M:%S");
  EXPECT_EQ(t, parse_iso8601("2024-03-04T08:00:05Z"));
  EXPECT_EQ(parse_with_format("2024-03-04 08:00:05", "iso8601"), t);
  EXPECT_THROW(parse_with_format("2024/03/04", "%Y-%m-%d"), ParseError);
}

TEST(Time, FormatRoundTrip) {
  const auto t = parse_iso8601("2024-03-04T08:00:05.123456Z");
  EXPECT_EQ(format_iso8601(t), "2024-03-04T08:00:05.123456Z");
  EXPECT_EQ(parse_iso8601(format_iso8601(t)), t);
  EXPECT_EQ(format_iso8601(parse_iso8601("2024-03-04T08:00:05Z")), "2024-03-04T08:00:05Z");
}

TEST(Time, DayBoundariesFollowReportingOffset) {
  const auto t = parse_iso8601("2024-03-04T23:30:00Z");
  EXPECT_EQ(day_of(t), day(2024, 3, 4));
  EXPECT_EQ(day_of(t, UtcOffset::parse("+01:00")), day(2024, 3, 5));
  EXPECT_EQ(day_of(parse_iso8601("2024-03-04T00:30:00Z"), UtcOffset::parse("-01:00")), day(2024, 3, 3));
  EXPECT_EQ(day_start(day(2024, 3, 5), UtcOffset::parse("+01:00")), parse_iso8601("2024-03-04T23:00:00Z"));
}

TEST(Time, CalendarFields) {
  EXPECT_EQ(iso_weekday(day(2024, 1, 1)), 1u);  // Monday
  EXPECT_EQ(iso_weekday(day(2024, 1, 7)), 7u);
  EXPECT_EQ(day_of_year(day(2024, 12, 31)), 366u);
  EXPECT_EQ(day_of_year(day(2023, 12, 31)), 365u);
  EXPECT_EQ(weekday_name(1), "Monday");
  EXPECT_EQ(weekday_name(7), "Sunday");
  EXPECT_EQ(format_date(day(2024, 2, 9)), "2024-02-09");
  EXPECT_EQ(parse_date("2024-02-09"), day(2024, 2, 9));
  EXPECT_THROW(parse_date("2024-2-9x"), ParseError);
}

TEST(Time, OffsetToString) {
  EXPECT_EQ(UtcOffset::parse("UTC").to_string(), UtcOffset{}.to_string());
  EXPECT_EQ(UtcOffset::parse(UtcOffset::parse("+05:30").to_string()), UtcOffset::parse("+05:30"));
  EXPECT_EQ(UtcOffset::parse(UtcOffset::parse("-03:00").to_string()), UtcOffset::parse("UTC-03:00"));
}

}  // namespace
}  // namespace wipcast
