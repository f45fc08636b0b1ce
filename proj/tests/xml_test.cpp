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

#include "wipcast/xml.hpp"

namespace wipcast {
namespace {

TEST(Xml, ParsesNestedElementsAndAttributes) {
  const auto root = xml::parse(
      "<?xml version=\"1.0\"?>\n<!-- c -->\n<log a='1'>\n  <trace><string key=\"k\" value=\"a &amp; b &#65;\"/></trace>\n</log>\n");
  EXPECT_EQ(root.name, "log");
  ASSERT_NE(root.attribute("a"), nullptr);
  EXPECT_EQ(*root.attribute("a"), "1");
  ASSERT_EQ(root.children.size(), 1u);
  const auto& s = root.children[0].children.at(0);
  EXPECT_EQ(s.name, "string");
  EXPECT_EQ(*s.attribute("value"), "a & b A");
  EXPECT_EQ(s.line, 4u);
  EXPECT_EQ(root.attribute("missing"), nullptr);
}

TEST(Xml, ReportsLineAndColumnOfMismatch) {
  try {
    xml::parse("<log>\n  <trace>\n  </log>\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_GT(e.column(), 0u);
    EXPECT_NE(std::string(e.what()).find("malformed XML"), std::string::npos);
  }
}

TEST(Xml, RejectsTruncatedAndTrailingContent) {
  EXPECT_THROW(xml::parse("<log><trace>"), ParseError);
  EXPECT_THROW(xml::parse("<log/><log/>"), ParseError);
  EXPECT_THROW(xml::parse(""), ParseError);
  EXPECT_THROW(xml::parse("<log a=1/>"), ParseError);
}

}  // namespace
}  // namespace wipcast
