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

// Small text helpers shared by the parsers, prompt renderers and similarity
// metrics.

#ifndef NEEDFORGE_TEXT_H_
#define NEEDFORGE_TEXT_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace needforge {

// Replaces every invalid UTF-8 sequence with U+FFFD.
std::string SanitizeUtf8(std::string_view input);

std::string_view Trim(std::string_view s);

// Trims and collapses every whitespace run to a single space.
std::string CollapseWhitespace(std::string_view s);

std::string ToLower(std::string_view s);

bool StartsWithIgnoreCase(std::string_view s, std::string_view prefix);

// Splits on runs of ASCII whitespace.
std::vector<std::string> SplitWhitespace(std::string_view s);

// Lowercased tokens separated by anything that is not alphanumeric. Bytes
// outside ASCII are kept inside tokens so non-Latin words survive.
std::vector<std::string> Tokenize(std::string_view text);

// Number of UTF-8 code points.
std::size_t CodePointCount(std::string_view s);

// Cuts `text` to at most `max_chars` code points. When a cut is needed it
// backs up to the last whitespace inside the limit (if any) and drops the
// trailing whitespace.
std::string TruncateAtWhitespace(std::string_view text, std::size_t max_chars);

// 64-bit FNV-1a; stable across platforms, used for seeding.
std::uint64_t StableHash(std::string_view s);

}  // namespace needforge

#endif  // NEEDFORGE_TEXT_H_
