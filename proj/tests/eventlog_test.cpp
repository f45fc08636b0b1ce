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

using testing::fixture;

ColumnMapping small_csv_mapping() {
  ColumnMapping m;
  m.case_column = "case";
  m.activity_column = "task";
  m.timestamp_column = "time";
  m.lifecycle_column = "lifecycle";
  m.attributes_json_column = "attrs";
  return m;
}

TEST(EventLog, XesFixtureInGlobalTimestampOrder) {
  const auto log = parse_xes(fixture("small.xes"), "small.xes");
  // Listing of the fixture sorted by instant (UTC).
  const std::vector<std::tuple<std::string, std::string, std::string>> expected = {
      {"A", "Register", "2024-03-04T08:00:00Z"}, {"B", "Register", "2024-03-04T11:00:00Z"},
      {"A", "Review", "2024-03-04T13:00:00Z"},   {"A", "Close", "2024-03-05T10:00:00Z"},
      {"C", "Register", "2024-03-05T12:00:00Z"}, {"B", "Review", "2024-03-06T08:00:00Z"},
      {"B", "Close", "2024-03-06T16:00:00Z"},    {"C", "Review", "2024-03-07T09:00:00Z"},
      {"C", "Close", "2024-03-07T10:00:00Z"},
  };
  ASSERT_EQ(log.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const auto& ev = log.events()[i];
    EXPECT_EQ(ev.case_id, std::get<0>(expected[i])) << i;
    EXPECT_EQ(ev.activity, std::get<1>(expected[i])) << i;
    EXPECT_EQ(format_iso8601(ev.timestamp), std::get<2>(expected[i])) << i;
  }
  EXPECT_EQ(log.meta().format, "xes");
  EXPECT_EQ(log.meta().row_count, 9u);
  EXPECT_EQ(log.meta().skipped, 0u);
}

TEST(EventLog, XesAttributesAreTyped) {
  const auto log = parse_xes(fixture("small.xes"));
  const auto& reg = log.events()[0];
  EXPECT_EQ(reg.lifecycle, "start");
  EXPECT_EQ(std::get<std::string>(reg.attributes.at("org:resource")), "ann");
  EXPECT_EQ(std::get<std::string>(reg.attributes.at("case:priority")), "high");
  EXPECT_EQ(std::get<double>(log.events()[2].attributes.at("effort")), 3.0);
  EXPECT_EQ(std::get<bool>(log.events()[5].attributes.at("escalated")), true);
  EXPECT_EQ(reg.attributes.count("concept:name"), 0u);
  EXPECT_EQ(reg.attributes.count("time:timestamp"), 0u);
}

TEST(EventLog, CsvFixtureMatchesXes) {
  const auto xes = parse_xes(fixture("small.xes"));
  const auto csv = parse_csv(fixture("small.csv"), small_csv_mapping());
  EXPECT_TRUE(csv.same_events(xes));
  EXPECT_EQ(csv.meta().format, "csv");
}

TEST(EventLog, CanonicalCsvRoundTrip) {
  const auto xes = parse_xes(fixture("small.xes"));
  const auto text = to_csv(xes);
  const auto back = parse_csv(text, ColumnMapping::canonical());
  EXPECT_TRUE(back.same_events(xes));
  EXPECT_EQ(to_csv(back), text);
}

TEST(EventLog, CsvBadRowsAreSkippedWithDiagnostics) {
  const auto log = parse_csv(fixture("bad_rows.csv"), ColumnMapping{});
  EXPECT_EQ(log.size(), 2u);
  EXPECT_EQ(log.meta().row_count, 5u);
  EXPECT_EQ(log.meta().skipped, 3u);
  ASSERT_EQ(log.meta().diagnostics.size(), 3u);
  EXPECT_EQ(log.meta().diagnostics[0].line, 3u);
  EXPECT_EQ(log.meta().diagnostics[1].line, 4u);
  EXPECT_EQ(log.meta().diagnostics[2].line, 5u);
}

TEST(EventLog, CsvMissingColumnIsConfigError) {
  ColumnMapping m;
  m.case_column = "nope";
  EXPECT_THROW(parse_csv(fixture("bad_rows.csv"), m), ConfigError);
}

TEST(EventLog, CsvCustomTimestampFormatAndOffset) {
  ColumnMapping m;
  m.timestamp_format = "%d.%m.%Y %H:%M";
  m.input_offset = UtcOffset::parse("+02:00");
  const auto log = parse_csv("case_id,activity,timestamp\nk,A,04.03.2024 10:00\n", m);
  EXPECT_EQ(format_iso8601(log.events()[0].timestamp), "2024-03-04T08:00:00Z");
}

TEST(EventLog, EmptyLogs) {
  EXPECT_THROW(parse_xes(fixture("empty.xes")), EmptyLogError);
  EXPECT_THROW(parse_csv("case_id,activity,timestamp\n", ColumnMapping{}), EmptyLogError);
  EXPECT_THROW(parse_csv("", ColumnMapping{}), EmptyLogError);
}

TEST(EventLog, MalformedXesReportsPosition) {
  try {
    parse_xes("<log>\n<trace>\n<event>\n</trace>\n</log>");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
  EXPECT_THROW(parse_xes("<notlog/>"), ParseError);
}

TEST(EventLog, XesEventWithoutTimestampIsSkipped) {
  const auto log = parse_xes(
      "<log><trace><string key=\"concept:name\" value=\"t\"/>"
      "<event><string key=\"concept:name\" value=\"a\"/></event>"
      "<event><string key=\"concept:name\" value=\"b\"/><date key=\"time:timestamp\" value=\"2024-01-01T00:00:00Z\"/></event>"
      "</trace></log>");
  EXPECT_EQ(log.size(), 1u);
  EXPECT_EQ(log.meta().skipped, 1u);
}

TEST(EventLog, EqualTimestampsKeepInputOrder) {
  const auto log = parse_csv(
      "case_id,activity,timestamp\nz,first,2024-01-01T00:00:00Z\na,second,2024-01-01T00:00:00Z\n"
      "m,earlier,2023-12-31T00:00:00Z\n",
      ColumnMapping{});
  EXPECT_EQ(log.events()[0].activity, "earlier");
  EXPECT_EQ(log.events()[1].activity, "first");
  EXPECT_EQ(log.events()[2].activity, "second");
}

TEST(EventLog, ValidateFixture) {
  const auto rep = validate(parse_xes(fixture("small.xes")));
  EXPECT_EQ(rep.event_count, 9u);
  EXPECT_EQ(rep.case_count, 3u);
  EXPECT_EQ(rep.first_day, testing::day(2024, 3, 4));
  EXPECT_EQ(rep.last_day, testing::day(2024, 3, 7));
  EXPECT_TRUE(rep.timestamps_monotonic);
  EXPECT_EQ(rep.duplicate_events, 0u);
}

}  // namespace
}  // namespace wipcast
