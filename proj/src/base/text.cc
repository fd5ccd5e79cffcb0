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

#include "mpe/base/text.h"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "mpe/base/error.h"

namespace mpe {

bool IsSpace(char32_t c) { return u_isUWhiteSpace(static_cast<UChar32>(c)); }

std::u32string ToUtf32(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  const auto *s = reinterpret_cast<const uint8_t *>(text.data());
  const int32_t length = static_cast<int32_t>(text.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(s, i, length, c);
    out.push_back(c < 0 ? U'\uFFFD' : static_cast<char32_t>(c));
  }
  return out;
}

std::string ToUtf8(std::u32string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t c : text) {
    uint8_t buf[4];
    int32_t n = 0;
    UBool error = false;
    U8_APPEND(buf, n, 4, static_cast<UChar32>(c), error);
    if (error) {
      out += "\xEF\xBF\xBD";
    } else {
      out.append(reinterpret_cast<const char *>(buf), n);
    }
  }
  return out;
}

std::string Normalize(std::string_view text, const NormalizationPolicy &policy) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2 *nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) {
    throw Error(ErrorCode::kFailedPrecondition, "ICU NFC normalizer unavailable");
  }
  icu::UnicodeString source = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  if (policy.case_insensitive) source.foldCase();
  icu::UnicodeString composed = nfc->normalize(source, status);
  if (U_FAILURE(status)) {
    throw Error(ErrorCode::kInvalidArgument, "text cannot be normalized");
  }
  std::string utf8;
  composed.toUTF8String(utf8);

  // Collapse whitespace and trim.
  std::u32string wide = ToUtf32(utf8);
  std::u32string out;
  out.reserve(wide.size());
  bool pending_space = false;
  for (char32_t c : wide) {
    if (IsSpace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(U' ');
    pending_space = false;
    out.push_back(c);
  }
  return ToUtf8(out);
}

size_t CountWords(std::string_view text) {
  size_t words = 0;
  bool in_word = false;
  for (char32_t c : ToUtf32(text)) {
    if (IsSpace(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++words;
    }
  }
  return words;
}

std::vector<std::string> SplitWhitespace(std::string_view text) {
  std::vector<std::string> words;
  std::u32string current;
  for (char32_t c : ToUtf32(text)) {
    if (IsSpace(c)) {
      if (!current.empty()) words.push_back(ToUtf8(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) words.push_back(ToUtf8(current));
  return words;
}

std::vector<std::string> BoundaryTokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::u32string word;
  auto flush = [&] {
    if (!word.empty()) tokens.push_back(ToUtf8(word));
    word.clear();
  };
  for (char32_t c : ToUtf32(text)) {
    if (u_isalnum(static_cast<UChar32>(c))) {
      word.push_back(c);
    } else {
      flush();
      if (!IsSpace(c)) tokens.push_back(ToUtf8(std::u32string_view(&c, 1)));
    }
  }
  flush();
  return tokens;
}

std::string Trim(std::string_view text) {
  std::u32string wide = ToUtf32(text);
  size_t begin = 0;
  size_t end = wide.size();
  while (begin < end && IsSpace(wide[begin])) ++begin;
  while (end > begin && IsSpace(wide[end - 1])) --end;
  return ToUtf8(std::u32string_view(wide).substr(begin, end - begin));
}

}  // namespace mpe
