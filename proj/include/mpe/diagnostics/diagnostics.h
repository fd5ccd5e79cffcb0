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

// Diagnostic subsets: rare, unseen, categorical, relational, exact match and
// long articles.

#ifndef MPE_DIAGNOSTICS_DIAGNOSTICS_H_
#define MPE_DIAGNOSTICS_DIAGNOSTICS_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mpe/base/text.h"
#include "mpe/corpus/record.h"

namespace mpe {

enum class FrequencyCounting {
  // One count per (record, property, value) pair.
  kInstances,
  // One count per record holding the property.
  kArticles,
};

struct PropertyStats {
  struct Entry {
    size_t train_frequency = 0;
    // Always counted per pair, whatever the frequency mode.
    std::map<std::string, size_t> value_counts;
  };
  std::map<std::string, Entry> properties;

  // Null when the property never occurs in train.
  const Entry *Find(const std::string &property) const;
};

PropertyStats ComputePropertyStats(const Corpus &train,
                                   FrequencyCounting counting = FrequencyCounting::kInstances);

// H(p) / log2(k) over the k distinct values; 0 when k == 1. Throws on an
// empty input or a non-positive count.
double NormalizedEntropy(std::span<const int64_t> counts);
double NormalizedEntropy(const std::map<std::string, size_t> &value_counts);

struct DiagnosticThresholds {
  static constexpr size_t kDefaultLongWords = 695;
  static constexpr double kDefaultLongPercentile = 85.0;

  // Exclusive: rare means frequency < rare_max.
  size_t rare_max = 4000;
  double entropy_threshold = 0.7;
  // At most one of these may be set; with neither, kDefaultLongWords.
  std::optional<size_t> long_words;
  std::optional<double> long_percentile;

  // Throws kInvalidArgument on out-of-range values or when both long-article
  // modes are set.
  void Validate() const;
};

// Word-count threshold in effect. Percentile mode takes the nearest-rank
// percentile of the train article lengths, so at most (100 - p)% of train
// articles are strictly longer.
size_t ResolveLongWords(const DiagnosticThresholds &thresholds, const Corpus &train);

struct PropertyFlags {
  bool unseen = false;
  bool rare = false;
  bool categorical = false;
  // False for unseen properties, which are relational by default.
  bool entropy_defined = false;
  double entropy = 0.0;
};

PropertyFlags ClassifyProperty(const std::string &property, const PropertyStats &stats,
                               const DiagnosticThresholds &thresholds);

struct InstanceFlags {
  bool exact_match = false;
  bool long_article = false;
};

// Word-boundary containment of the normalized value in the normalized article.
bool ExactMatch(std::string_view value, std::string_view article,
                const NormalizationPolicy &policy = {});

InstanceFlags ClassifyInstance(const MpeRecord &record, const PropertyValuePair &pair,
                               size_t long_words, const NormalizationPolicy &policy = {});

enum class Subset { kRare = 0, kUnseen, kCategorical, kRelational, kExactMatch, kLongArticle };
inline constexpr size_t kSubsetCount = 6;
inline constexpr std::array<Subset, kSubsetCount> kAllSubsets = {
    Subset::kRare,       Subset::kUnseen,     Subset::kCategorical,
    Subset::kRelational, Subset::kExactMatch, Subset::kLongArticle};

const char *SubsetName(Subset subset);
Subset ParseSubset(std::string_view name);

// Flags of one (article, property) instance. A multi-valued instance is an
// exact match when any of its values is.
struct InstanceLabel {
  std::string article_id;
  std::string property;
  std::array<bool, kSubsetCount> flags{};

  bool has(Subset s) const { return flags[static_cast<size_t>(s)]; }
};

using DiagnosticLabels = std::vector<InstanceLabel>;

// Labels every instance of `split`, in record then first-appearance order.
DiagnosticLabels LabelInstances(const Corpus &split, const PropertyStats &stats,
                                const DiagnosticThresholds &thresholds, size_t long_words,
                                const NormalizationPolicy &policy = {});

struct SubsetReport {
  size_t articles = 0;
  // Mean over articles of the per-article share, in percent.
  std::array<double, kSubsetCount> percent{};
};

SubsetReport ComputeSubsetReport(const Corpus &split, const DiagnosticLabels &labels);

std::string FormatSubsetTable(const SubsetReport &report);
std::string SubsetReportJson(const SubsetReport &report);

void WriteLabels(const DiagnosticLabels &labels, const std::filesystem::path &path);
DiagnosticLabels ReadLabels(const std::filesystem::path &path);

struct MatchSpan {
  // Code-point offsets into the article, [start, end).
  size_t start = 0;
  size_t end = 0;
  size_t distance = 0;

  auto operator<=>(const MatchSpan &) const = default;
};

// Article spans within `max_edit_distance` Levenshtein edits of `value`,
// selected greedily best-distance-first without overlap and returned in that
// order. Ties prefer the span closest in length to the value, then the
// earliest start.
std::vector<MatchSpan> ApproxMatch(std::string_view value, std::string_view article,
                                   size_t max_edit_distance);

}  // namespace mpe

#endif  // MPE_DIAGNOSTICS_DIAGNOSTICS_H_
