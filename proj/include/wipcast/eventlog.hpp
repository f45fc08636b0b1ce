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

// Event-log ingestion from XES and CSV into a normalized, time-sorted
// sequence of events.

#include <algorithm>
#include <charconv>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "wipcast/csv.hpp"
#include "wipcast/error.hpp"
#include "wipcast/time.hpp"
#include "wipcast/xml.hpp"

namespace wipcast {

using AttributeValue = std::variant<std::string, double, bool, Timestamp>;

struct Event {
  std::string case_id;
  std::string activity;
  Timestamp timestamp;
  std::optional<std::string> lifecycle;
  std::map<std::string, AttributeValue> attributes;

  friend bool operator==(const Event&, const Event&) = default;
};

struct Diagnostic {
  std::size_t line = 0;  // XML line of the event element, or CSV record line
  std::string message;
};

struct SourceMeta {
  std::string file_name;
  std::string format;          // "xes" or "csv"
  std::size_t row_count = 0;   // events (XES) or data rows (CSV) seen in the input
  std::size_t skipped = 0;
  std::vector<Diagnostic> diagnostics;
};

/// Immutable, time-ordered event sequence. Equal timestamps keep their input
/// order.
class EventLog {
 public:
  EventLog() = default;
  EventLog(std::vector<Event> events, SourceMeta meta) : events_(std::move(events)), meta_(std::move(meta)) {
    // Input order is the primary tie-breaker; stability provides it.
    std::stable_sort(events_.begin(), events_.end(),
                     [](const Event& a, const Event& b) { return a.timestamp < b.timestamp; });
  }

  std::span<const Event> events() const { return events_; }
  const SourceMeta& meta() const { return meta_; }
  std::size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }

  /// Content equality, ignoring source metadata.
  bool same_events(const EventLog& other) const { return events_ == other.events_; }

 private:
  std::vector<Event> events_;
  SourceMeta meta_;
};

// ---------------------------------------------------------------------------
// XES

namespace detail {

inline std::optional<AttributeValue> xes_attribute_value(const xml::Element& el, std::string& error) {
  const std::string* value = el.attribute("value");
  if (!value) {
    error = "attribute element <" + el.name + "> has no value";
    return std::nullopt;
  }
  if (el.name == "string" || el.name == "id") return AttributeValue{*value};
  if (el.name == "date") {
    try {
      return AttributeValue{parse_iso8601(*value)};
    } catch (const ParseError& e) {
      error = e.what();
      return std::nullopt;
    }
  }
  if (el.name == "int" || el.name == "float") {
    double d = 0;
    const auto* first = value->data();
    const auto* last = first + value->size();
    const auto res = std::from_chars(first, last, d);
    if (res.ec != std::errc{} || res.ptr != last) {
      error = "invalid numeric value '" + *value + "'";
      return std::nullopt;
    }
    return AttributeValue{d};
  }
  if (el.name == "boolean") {
    if (*value == "true") return AttributeValue{true};
    if (*value == "false") return AttributeValue{false};
    error = "invalid boolean value '" + *value + "'";
    return std::nullopt;
  }
  return std::nullopt;  // list/container and unknown types are ignored
}

inline bool is_xes_attribute(const xml::Element& el) {
  return el.name == "string" || el.name == "date" || el.name == "int" || el.name == "float" ||
         el.name == "boolean" || el.name == "id";
}

}  // namespace detail

/// Parses an XES document. Events lacking concept:name or time:timestamp are
/// skipped and reported in the log's diagnostics. Trace-level attributes
/// other than concept:name are copied onto each event under a "case:" prefix.
inline EventLog parse_xes(std::string_view bytes, std::string file_name = "") {
  const xml::Element root = xml::parse(bytes);
  if (root.name != "log") {
    throw ParseError("XES root element must be <log>, found <" + root.name + ">", root.line, root.column);
  }
  SourceMeta meta;
  meta.file_name = std::move(file_name);
  meta.format = "xes";
  std::vector<Event> events;

  const auto skip = [&](const xml::Element& el, std::string msg) {
    ++meta.skipped;
    meta.diagnostics.push_back({el.line, std::move(msg)});
  };

  for (const auto& child : root.children) {
    if (child.name == "event") {
      ++meta.row_count;
      skip(child, "event outside of a trace");
      continue;
    }
    if (child.name != "trace") continue;

    std::optional<std::string> case_id;
    std::map<std::string, AttributeValue> case_attrs;
    for (const auto& a : child.children) {
      if (!detail::is_xes_attribute(a)) continue;
      const std::string* key = a.attribute("key");
      if (!key) continue;
      std::string err;
      auto v = detail::xes_attribute_value(a, err);
      if (!v) continue;
      if (*key == "concept:name") {
        if (const auto* s = std::get_if<std::string>(&*v)) case_id = *s;
      } else {
        case_attrs.emplace("case:" + *key, std::move(*v));
      }
    }

    for (const auto& ev_el : child.children) {
      if (ev_el.name != "event") continue;
      ++meta.row_count;
      if (!case_id || case_id->empty()) {
        skip(ev_el, "trace has no concept:name; event skipped");
        continue;
      }
      Event ev;
      ev.case_id = *case_id;
      ev.attributes = case_attrs;
      bool has_activity = false;
      bool has_timestamp = false;
      std::string bad;
      for (const auto& a : ev_el.children) {
        if (!detail::is_xes_attribute(a)) continue;
        const std::string* key = a.attribute("key");
        if (!key) continue;
        std::string err;
        auto v = detail::xes_attribute_value(a, err);
        if (!v) {
          if (*key == "time:timestamp" || *key == "concept:name") bad = *key + ": " + err;
          continue;
        }
        if (*key == "concept:name") {
          if (const auto* s = std::get_if<std::string>(&*v); s && !s->empty()) {
            ev.activity = *s;
            has_activity = true;
          }
        } else if (*key == "time:timestamp") {
          if (const auto* t = std::get_if<Timestamp>(&*v)) {
            ev.timestamp = *t;
            has_timestamp = true;
          } else if (const auto* s = std::get_if<std::string>(&*v)) {
            try {
              ev.timestamp = parse_iso8601(*s);
              has_timestamp = true;
            } catch (const ParseError& e) {
              bad = std::string("time:timestamp: ") + e.what();
            }
          }
        } else if (*key == "lifecycle:transition") {
          if (const auto* s = std::get_if<std::string>(&*v); s && !s->empty()) ev.lifecycle = *s;
        } else {
          ev.attributes.insert_or_assign(*key, std::move(*v));
        }
      }
      if (!has_activity || !has_timestamp) {
        std::string msg = "event in case '" + ev.case_id + "' missing ";
        msg += !has_activity ? "concept:name" : "time:timestamp";
        if (!bad.empty()) msg += " (" + bad + ")";
        skip(ev_el, std::move(msg));
        continue;
      }
      events.push_back(std::move(ev));
    }
  }
  if (events.empty()) {
    throw EmptyLogError("event log '" + meta.file_name + "' contains no usable events (" +
                        std::to_string(meta.skipped) + " skipped)");
  }
  return EventLog(std::move(events), std::move(meta));
}

// ---------------------------------------------------------------------------
// CSV

struct ColumnMapping {
  std::string case_column = "case_id";
  std::string activity_column = "activity";
  std::string timestamp_column = "timestamp";
  std::optional<std::string> lifecycle_column;
  /// strftime-like format, or "iso8601".
  std::string timestamp_format = "iso8601";
  /// Offset assumed for timestamps without an explicit one.
  UtcOffset input_offset;
  /// Column holding a JSON object of typed attributes (as written by to_csv).
  std::optional<std::string> attributes_json_column;
  char separator = ',';

  /// The layout written by to_csv.
  static ColumnMapping canonical() {
    ColumnMapping m;
    m.lifecycle_column = "lifecycle";
    m.attributes_json_column = "attributes";
    return m;
  }
};

namespace detail {

inline nlohmann::json attributes_to_json(const std::map<std::string, AttributeValue>& attrs) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : attrs) {
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, Timestamp>) {
            j[k] = {{"$ts", format_iso8601(x)}};
          } else {
            j[k] = x;
          }
        },
        v);
  }
  return j;
}

inline std::map<std::string, AttributeValue> attributes_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("attributes column is not a JSON object");
  std::map<std::string, AttributeValue> out;
  for (const auto& [k, v] : j.items()) {
    if (v.is_string()) out.emplace(k, v.get<std::string>());
    else if (v.is_boolean()) out.emplace(k, v.get<bool>());
    else if (v.is_number()) out.emplace(k, v.get<double>());
    else if (v.is_object() && v.contains("$ts") && v["$ts"].is_string())
      out.emplace(k, parse_iso8601(v["$ts"].get<std::string>()));
    else throw ParseError("unsupported attribute value for key '" + k + "'");
  }
  return out;
}

}  // namespace detail

/// Parses a CSV event log with a header row. Rows whose timestamp cannot be
/// parsed (or with an empty case/activity) are skipped and reported.
inline EventLog parse_csv(std::string_view bytes, const ColumnMapping& mapping, std::string file_name = "") {
  auto records = csv::read(bytes, mapping.separator);
  if (records.empty()) throw EmptyLogError("CSV event log '" + file_name + "' has no header row");
  const auto& header = records.front().fields;

  const auto require = [&](const std::string& name, const char* role) {
    auto idx = csv::column_index(header, name);
    if (!idx) throw ConfigError(std::string("CSV column for ") + role + " '" + name + "' not found in header");
    return *idx;
  };
  const std::size_t case_idx = require(mapping.case_column, "case id");
  const std::size_t act_idx = require(mapping.activity_column, "activity");
  const std::size_t ts_idx = require(mapping.timestamp_column, "timestamp");
  std::optional<std::size_t> life_idx;
  if (mapping.lifecycle_column) life_idx = require(*mapping.lifecycle_column, "lifecycle");
  std::optional<std::size_t> attr_idx;
  if (mapping.attributes_json_column) attr_idx = require(*mapping.attributes_json_column, "attributes");

  SourceMeta meta;
  meta.file_name = std::move(file_name);
  meta.format = "csv";
  std::vector<Event> events;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    ++meta.row_count;
    const auto skip = [&](std::string msg) {
      ++meta.skipped;
      meta.diagnostics.push_back({rec.line, std::move(msg)});
    };
    if (rec.fields.size() != header.size()) {
      skip("expected " + std::to_string(header.size()) + " fields, found " + std::to_string(rec.fields.size()));
      continue;
    }
    Event ev;
    ev.case_id = rec.fields[case_idx];
    ev.activity = rec.fields[act_idx];
    if (ev.case_id.empty() || ev.activity.empty()) {
      skip("empty case id or activity");
      continue;
    }
    try {
      ev.timestamp = parse_with_format(rec.fields[ts_idx], mapping.timestamp_format, mapping.input_offset);
    } catch (const ParseError& e) {
      skip(e.what());
      continue;
    }
    if (life_idx && !rec.fields[*life_idx].empty()) ev.lifecycle = rec.fields[*life_idx];
    if (attr_idx && !rec.fields[*attr_idx].empty()) {
      try {
        ev.attributes = detail::attributes_from_json(nlohmann::json::parse(rec.fields[*attr_idx]));
      } catch (const std::exception& e) {
        skip(std::string("bad attributes: ") + e.what());
        continue;
      }
    }
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c == case_idx || c == act_idx || c == ts_idx || c == life_idx || c == attr_idx) continue;
      if (!rec.fields[c].empty()) ev.attributes.insert_or_assign(header[c], rec.fields[c]);
    }
    events.push_back(std::move(ev));
  }
  if (events.empty()) {
    throw EmptyLogError("event log '" + meta.file_name + "' contains no usable events (" +
                        std::to_string(meta.skipped) + " skipped)");
  }
  return EventLog(std::move(events), std::move(meta));
}

/// Writes the log in the canonical CSV layout (ColumnMapping::canonical()).
inline std::string to_csv(const EventLog& log) {
  std::string out = csv::join({"case_id", "activity", "timestamp", "lifecycle", "attributes"});
  for (const auto& ev : log.events()) {
    out += csv::join({ev.case_id, ev.activity, format_iso8601(ev.timestamp), ev.lifecycle.value_or(""),
                      ev.attributes.empty() ? std::string{} : detail::attributes_to_json(ev.attributes).dump()});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Validation

struct ValidationReport {
  std::size_t event_count = 0;
  std::size_t case_count = 0;
  std::optional<Timestamp> first;
  std::optional<Timestamp> last;
  std::optional<Day> first_day;
  std::optional<Day> last_day;
  bool timestamps_monotonic = true;
  std::size_t duplicate_events = 0;  // same case_id + activity + timestamp
};

inline ValidationReport validate(const EventLog& log, UtcOffset tz = {}) {
  ValidationReport rep;
  const auto events = log.events();
  rep.event_count = events.size();
  std::set<std::string_view> cases;
  std::set<std::tuple<std::string_view, std::string_view, Timestamp>> seen;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& ev = events[i];
    cases.insert(ev.case_id);
    if (!seen.emplace(ev.case_id, ev.activity, ev.timestamp).second) ++rep.duplicate_events;
    if (i > 0 && events[i - 1].timestamp > ev.timestamp) rep.timestamps_monotonic = false;
  }
  rep.case_count = cases.size();
  if (!events.empty()) {
    rep.first = events.front().timestamp;
    rep.last = events.back().timestamp;
    for (const auto& ev : events) {
      rep.first = std::min(*rep.first, ev.timestamp);
      rep.last = std::max(*rep.last, ev.timestamp);
    }
    rep.first_day = day_of(*rep.first, tz);
    rep.last_day = day_of(*rep.last, tz);
  }
  return rep;
}

}  // namespace wipcast
