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

// A small non-validating XML reader producing an element tree. It covers
// what event-log files use: elements, attributes, character/entity
// references, comments, CDATA, processing instructions and a DOCTYPE.
// Errors carry the 1-based line and column of the offending character.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wipcast/error.hpp"

namespace wipcast::xml {

struct Element {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<Element> children;
  std::size_t line = 0;
  std::size_t column = 0;

  const std::string* attribute(std::string_view key) const {
    for (const auto& [k, v] : attributes) {
      if (k == key) return &v;
    }
    return nullptr;
  }
};

namespace detail {

inline void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {
    if (s_.size() >= 3 && static_cast<unsigned char>(s_[0]) == 0xEF &&
        static_cast<unsigned char>(s_[1]) == 0xBB && static_cast<unsigned char>(s_[2]) == 0xBF) {
      pos_ = 3;
    }
  }

  Element parse_document() {
    std::optional<Element> root;
    for (;;) {
      skip_ws();
      if (eof()) break;
      if (!starts_with("<")) {
        fail(root ? "text after the root element" : "text before the root element");
      }
      if (starts_with("<?")) {
        skip_until("?>", "unterminated processing instruction");
      } else if (starts_with("<!--")) {
        skip_until("-->", "unterminated comment");
      } else if (starts_with("<!DOCTYPE")) {
        skip_doctype();
      } else {
        if (root) fail("more than one root element");
        root = parse_element();
      }
    }
    if (!root) fail("document has no root element");
    return std::move(*root);
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError("malformed XML: " + msg, line_, col_); }

  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return eof() ? '\0' : s_[pos_]; }
  bool starts_with(std::string_view p) const { return s_.substr(pos_, p.size()) == p; }

  void bump() {
    if (s_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }
  void bump(std::size_t n) {
    for (std::size_t i = 0; i < n && !eof(); ++i) bump();
  }

  void skip_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r' || peek() == '\n')) bump();
  }

  void skip_until(std::string_view terminator, const char* msg) {
    while (!eof() && !starts_with(terminator)) bump();
    if (eof()) fail(msg);
    bump(terminator.size());
  }

  void skip_doctype() {
    int depth = 0;
    while (!eof()) {
      const char c = peek();
      bump();
      if (c == '[') ++depth;
      else if (c == ']') --depth;
      else if (c == '>' && depth <= 0) return;
    }
    fail("unterminated DOCTYPE");
  }

  static bool name_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
           c == ':' || c == '-' || c == '.' || static_cast<unsigned char>(c) >= 0x80;
  }

  std::string parse_name() {
    const std::size_t start = pos_;
    while (!eof() && name_char(peek())) bump();
    if (start == pos_) fail("expected a name");
    return std::string(s_.substr(start, pos_ - start));
  }

  void parse_reference(std::string& out) {
    // at '&'
    bump();
    const std::size_t start = pos_;
    while (!eof() && peek() != ';' && pos_ - start < 12) bump();
    if (peek() != ';') fail("unterminated entity reference");
    const std::string_view ref = s_.substr(start, pos_ - start);
    bump();
    if (ref == "lt") out.push_back('<');
    else if (ref == "gt") out.push_back('>');
    else if (ref == "amp") out.push_back('&');
    else if (ref == "quot") out.push_back('"');
    else if (ref == "apos") out.push_back('\'');
    else if (ref.size() > 1 && ref[0] == '#') {
      std::uint32_t cp = 0;
      const bool hex = ref[1] == 'x' || ref[1] == 'X';
      const std::string_view digits = ref.substr(hex ? 2 : 1);
      if (digits.empty()) fail("empty character reference");
      for (char c : digits) {
        int v = -1;
        if (c >= '0' && c <= '9') v = c - '0';
        else if (hex && c >= 'a' && c <= 'f') v = c - 'a' + 10;
        else if (hex && c >= 'A' && c <= 'F') v = c - 'A' + 10;
        if (v < 0) fail("invalid character reference");
        cp = cp * (hex ? 16 : 10) + static_cast<std::uint32_t>(v);
        if (cp > 0x10FFFF) fail("character reference out of range");
      }
      append_utf8(out, cp);
    } else {
      fail("unknown entity '&" + std::string(ref) + ";'");
    }
  }

  std::string parse_attribute_value() {
    const char quote = peek();
    if (quote != '"' && quote != '\'') fail("attribute value must be quoted");
    bump();
    std::string value;
    while (!eof() && peek() != quote) {
      if (peek() == '<') fail("'<' in attribute value");
      if (peek() == '&') {
        parse_reference(value);
      } else {
        value.push_back(peek());
        bump();
      }
    }
    if (eof()) fail("unterminated attribute value");
    bump();
    return value;
  }

  Element parse_element() {
    Element el;
    el.line = line_;
    el.column = col_;
    bump();  // '<'
    el.name = parse_name();
    for (;;) {
      const bool had_ws = !eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r' || peek() == '\n');
      skip_ws();
      if (eof()) fail("unexpected end of input inside tag <" + el.name + ">");
      if (starts_with("/>")) {
        bump(2);
        return el;
      }
      if (peek() == '>') {
        bump();
        break;
      }
      if (!had_ws) fail("expected whitespace between attributes");
      std::string key = parse_name();
      skip_ws();
      if (peek() != '=') fail("expected '=' after attribute name '" + key + "'");
      bump();
      skip_ws();
      std::string value = parse_attribute_value();
      if (el.attribute(key)) fail("duplicate attribute '" + key + "'");
      el.attributes.emplace_back(std::move(key), std::move(value));
    }
    // Content. Character data is discarded: event-log elements carry their
    // payload in attributes.
    for (;;) {
      if (eof()) fail("missing closing tag </" + el.name + ">");
      if (starts_with("</")) {
        bump(2);
        const std::string closing = parse_name();
        if (closing != el.name) fail("closing tag </" + closing + "> does not match <" + el.name + ">");
        skip_ws();
        if (peek() != '>') fail("expected '>' in closing tag");
        bump();
        return el;
      }
      if (starts_with("<!--")) {
        skip_until("-->", "unterminated comment");
      } else if (starts_with("<![CDATA[")) {
        skip_until("]]>", "unterminated CDATA section");
      } else if (starts_with("<?")) {
        skip_until("?>", "unterminated processing instruction");
      } else if (peek() == '<') {
        el.children.push_back(parse_element());
      } else if (peek() == '&') {
        std::string sink;
        parse_reference(sink);
      } else {
        bump();
      }
    }
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

}  // namespace detail

inline Element parse(std::string_view text) { return detail::Parser(text).parse_document(); }

}  // namespace wipcast::xml
