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

// Record data model and the JSON-lines record stream.
//
// One record per line:
//   {"article_id": "a1", "text": "...", "pairs": [{"property": "p",
//    "value": "v"}, ...]}
// UTF-8, LF line endings. Prediction files use the same layout; "text" may
// be omitted there and "pairs" may be empty.

#ifndef MPE_CORPUS_RECORD_H_
#define MPE_CORPUS_RECORD_H_

#include <compare>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "mpe/base/text.h"

namespace mpe {

struct PropertyValuePair {
  std::string property;
  std::string value;

  auto operator<=>(const PropertyValuePair &) const = default;
};

struct MpeRecord {
  std::string article_id;
  std::string text;
  // Duplicate-free, in first-occurrence order. The order is the target
  // order used when training generators.
  std::vector<PropertyValuePair> pairs;
};

using Corpus = std::vector<MpeRecord>;

// Applies the policy to both fields and checks that neither is empty.
PropertyValuePair CanonicalPair(const PropertyValuePair &pair,
                                const NormalizationPolicy &policy);

// Removes repeated pairs, keeping the first occurrence.
void DeduplicatePairs(std::vector<PropertyValuePair> &pairs);

struct RecordParseOptions {
  bool require_text = true;
  bool allow_empty_pairs = false;
};

// Parses one line. Errors carry no line number; the reader adds it.
MpeRecord ParseRecordLine(std::string_view line,
                          const NormalizationPolicy &policy,
                          const RecordParseOptions &options = {});

std::string RecordToJsonLine(const MpeRecord &record, bool include_text = true);

// Streams validated records from a file in file order. Detects repeated
// article ids across the whole stream.
class RecordReader {
 public:
  RecordReader(const std::filesystem::path &path, NormalizationPolicy policy,
               RecordParseOptions options = {});

  std::optional<MpeRecord> Next();

  size_t line_number() const { return line_number_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  NormalizationPolicy policy_;
  RecordParseOptions options_;
  size_t line_number_ = 0;
  std::unordered_set<std::string> seen_ids_;
};

Corpus LoadRecords(const std::filesystem::path &path,
                   const NormalizationPolicy &policy,
                   const RecordParseOptions &options = {});

void WriteRecords(std::ostream &out, const Corpus &records,
                  bool include_text = true);
void WriteRecords(const std::filesystem::path &path, const Corpus &records,
                  bool include_text = true);

}  // namespace mpe

#endif  // MPE_CORPUS_RECORD_H_
