// Copyright 2026 The NeedForge Authors.
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


#include "needforge/text.h"

#include <gtest/gtest.h>

namespace needforge {
namespace {

TEST(SanitizeUtf8, KeepsValidText) {
  EXPECT_EQ(SanitizeUtf8("caf\xC3\xA9 \xE2\x82\xAC"), "caf\xC3\xA9 \xE2\x82\xAC");
}

TEST(SanitizeUtf8, ReplacesInvalidBytes) {
  EXPECT_EQ(SanitizeUtf8("a\xFF" "b"), "a\xEF\xBF\xBD" "b");
  // Truncated two-byte sequence at the end.
  EXPECT_EQ(SanitizeUtf8("x\xC3"), "x\xEF\xBF\xBD");
  // Overlong encoding of '/'.
  EXPECT_EQ(SanitizeUtf8("\xC0\xAF"), "\xEF\xBF\xBD\xEF\xBF\xBD");
  // UTF-16 surrogate.
  EXPECT_EQ(SanitizeUtf8("\xED\xA0\x80"), "\xEF\xBF\xBD\xEF\xBF\xBD\xEF\xBF\xBD");
}

TEST(Whitespace, TrimAndCollapse) {
  EXPECT_EQ(Trim("  a b \n"), "a b");
  EXPECT_EQ(Trim(" \t "), "");
  EXPECT_EQ(CollapseWhitespace("  a \n\t b  c "), "a b c");
  EXPECT_EQ(SplitWhitespace(" a  bb\tc\n"), (std::vector<std::string>{"a", "bb", "c"}));
}

TEST(Tokenize, LowercasesAndSplitsOnPunctuation) {
  EXPECT_EQ(Tokenize("Hello, World! x-ray 42"),
            (std::vector<std::string>{"hello", "world", "x", "ray", "42"}));
  EXPECT_TRUE(Tokenize(" ,. ").empty());
  // Non-ASCII letters stay inside the token.
  EXPECT_EQ(Tokenize("caf\xC3\xA9 au lait"),
            (std::vector<std::string>{"caf\xC3\xA9", "au", "lait"}));
}

TEST(TruncateAtWhitespace, ShortTextUntouched) {
  EXPECT_EQ(TruncateAtWhitespace("short text", 100), "short text");
  EXPECT_EQ(TruncateAtWhitespace("exact", 5), "exact");
}

TEST(TruncateAtWhitespace, BacksUpToWordBoundary) {
  EXPECT_EQ(TruncateAtWhitespace("alpha beta gamma", 8), "alpha");
  EXPECT_EQ(TruncateAtWhitespace("alpha beta gamma", 10), "alpha beta");
  EXPECT_EQ(TruncateAtWhitespace("alpha beta gamma", 11), "alpha beta");
}

TEST(TruncateAtWhitespace, CutsSingleLongWord) {
  EXPECT_EQ(TruncateAtWhitespace("abcdefghij", 4), "abcd");
}

TEST(TruncateAtWhitespace, CountsCodePoints) {
  // Four code points, eight bytes.
  const std::string s = "\xC3\xA9\xC3\xA9 \xC3\xA9\xC3\xA9";
  EXPECT_EQ(CodePointCount(s), 5u);
  EXPECT_EQ(TruncateAtWhitespace(s, 4), "\xC3\xA9\xC3\xA9");
}

TEST(StableHash, IsFnv1a) {
  EXPECT_EQ(StableHash(""), 14695981039346656037ULL);
  EXPECT_EQ(StableHash("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_NE(StableHash("ab"), StableHash("ba"));
}

TEST(StartsWithIgnoreCase, Basic) {
  EXPECT_TRUE(StartsWithIgnoreCase("Description: x", "description:"));
  EXPECT_FALSE(StartsWithIgnoreCase("Desc", "description"));
}

}  // namespace
}  // namespace needforge
