// Copyright 2026 The MPE Toolkit Authors.
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

// Unicode text helpers shared by every module. All strings are UTF-8.

#ifndef MPE_BASE_TEXT_H_
#define MPE_BASE_TEXT_H_

#include <string>
#include <string_view>
#include <vector>

namespace mpe {

// Canonical form used whenever two texts are compared: NFC composition,
// runs of Unicode whitespace collapsed to one space, leading and trailing
// whitespace trimmed. Case folding is opt-in.
struct NormalizationPolicy {
  bool case_insensitive = false;
};

std::string Normalize(std::string_view text, const NormalizationPolicy &policy);

// Number of maximal non-whitespace runs.
size_t CountWords(std::string_view text);

std::vector<std::string> SplitWhitespace(std::string_view text);

// Word-boundary tokens: maximal runs of letters/digits, and every other
// non-space character as its own token. "Iranian." -> {"Iranian", "."}.
std::vector<std::string> BoundaryTokens(std::string_view text);

std::u32string ToUtf32(std::string_view text);
std::string ToUtf8(std::u32string_view text);

bool IsSpace(char32_t c);

std::string Trim(std::string_view text);

}  // namespace mpe

#endif  // MPE_BASE_TEXT_H_
