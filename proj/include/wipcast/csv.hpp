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

// RFC-4180 style CSV reading and writing.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wipcast/error.hpp"

namespace wipcast::csv {

struct Record {
  std::vector<std::string> fields;
  std::size_t line = 0;  // 1-based line where the record starts
};

/// Splits `text` into records. Quoted fields may contain separators, doubled
/// quotes and line breaks. A leading UTF-8 BOM is ignored; blank lines are
/// skipped.
inline std::vector<Record> read(std::string_view text, char sep = ',') {
  if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF &&
      static_cast<unsigned char>(text[1]) == 0xBB && static_cast<unsigned char>(text[2]) == 0xBF) {
    text.remove_prefix(3);
  }
  std::vector<Record> out;
  Record current;
  std::string field;
  bool in_quotes = false;
  bool field_was_quoted = false;
  bool record_has_content = false;
  std::size_t line = 1;
  std::size_t column = 1;
  std::size_t quote_line = 0;
  std::size_t quote_column = 0;
  current.line = 1;

  const auto end_field = [&] {
    current.fields.push_back(std::move(field));
    field.clear();
    field_was_quoted = false;
  };
  const auto end_record = [&] {
    if (record_has_content) {
      end_field();
      out.push_back(std::move(current));
    }
    current = Record{};
    field.clear();
    field_was_quoted = false;
    record_has_content = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
          ++column;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
        if (c == '\n') {
          ++line;
          column = 0;
        }
      }
      ++column;
      continue;
    }
    if (c == '"') {
      if (!field.empty() || field_was_quoted) {
        throw ParseError("unexpected quote inside unquoted CSV field", line, column);
      }
      in_quotes = true;
      quote_line = line;
      quote_column = column;
      field_was_quoted = true;
      record_has_content = true;
    } else if (c == sep) {
      end_field();
      record_has_content = true;
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      end_record();
      ++line;
      column = 0;
      current.line = line;
    } else {
      if (field_was_quoted) {
        throw ParseError("characters after closing quote in CSV field", line, column);
      }
      field.push_back(c);
      record_has_content = true;
    }
    ++column;
  }
  if (in_quotes) throw ParseError("unterminated quoted CSV field", quote_line, quote_column);
  end_record();
  return out;
}

inline std::string quote(std::string_view field, char sep = ',') {
  const bool needs = field.find_first_of(std::string{sep} + "\"\r\n") != std::string_view::npos ||
                     (!field.empty() && (field.front() == ' ' || field.back() == ' '));
  if (!needs) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

inline std::string join(const std::vector<std::string>& fields, char sep = ',') {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line.push_back(sep);
    line += quote(fields[i], sep);
  }
  line.push_back('\n');
  return line;
}

/// Header lookup helper: index of `name` in `header`, if present.
inline std::optional<std::size_t> column_index(const std::vector<std::string>& header,
                                               std::string_view name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

}  // namespace wipcast::csv
