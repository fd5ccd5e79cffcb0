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

// Leakage-free train/validation/test splitting of MPE corpora.

#ifndef MPE_SPLITTER_SPLIT_H_
#define MPE_SPLITTER_SPLIT_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mpe/corpus/record.h"

namespace mpe {

enum class Split { kTrain = 0, kValidation = 1, kTest = 2 };

const char *SplitName(Split split);
Split ParseSplit(std::string_view name);

// One article with the values of a single property, the unit of the
// single-property extraction task.
struct SinglePropertyRecord {
  std::string article_id;
  std::string text;
  std::string property;
  std::vector<std::string> values;
};

// Unions single-property records into one record per article. Articles and
// pairs keep first-appearance order; the pair sets do not depend on input
// order. Throws when one article id carries two different texts.
Corpus MergeSingleToMpe(const std::vector<SinglePropertyRecord> &records);

// One output per distinct property, in first-appearance order.
std::vector<SinglePropertyRecord> ReduceToSingle(const MpeRecord &record);

struct SplitConfig {
  // Full-scale figures: the cap on evaluation articles, the unseen-property
  // drafts, and the seen-property top-ups, for a 4.1M-article corpus.
  static constexpr size_t kFullScaleCorpusArticles = 4'100'000;
  static constexpr size_t kFullScaleMaxEvalArticles = 5'000;
  static constexpr size_t kFullScaleDraftedArticles = 1'000;
  static constexpr size_t kFullScaleSeenArticles = 2'000;

  double test_only_property_fraction = 0.2;
  double val_only_property_fraction = 0.2;
  double shared_valtest_property_fraction = 0.1;
  size_t seen_articles_per_eval_split = kFullScaleSeenArticles;
  size_t max_eval_split_articles = kFullScaleMaxEvalArticles;
  uint64_t seed = 0;

  // Desk-scale defaults for a corpus of `articles` records: evaluation splits
  // capped at 40% of the corpus (a desk inventory has few truly rare
  // properties, so drafted splits are proportionally larger) and a seen
  // top-up of 5% of the corpus per evaluation split.
  static SplitConfig ScaledTo(size_t articles);
};

struct DroppedPair {
  std::string article_id;
  PropertyValuePair pair;
  std::string reason;
};

struct SplitAssignment {
  std::map<std::string, Split> split_of;
  std::set<std::string> test_only_properties;
  std::set<std::string> val_only_properties;
  std::set<std::string> shared_valtest_properties;
  std::vector<DroppedPair> dropped_pairs;
};

// Greedy controlled split. Deterministic for a fixed (corpus, config).
SplitAssignment ControlledSplit(const Corpus &corpus, const SplitConfig &config);

struct SplitCorpora {
  Corpus train;
  Corpus validation;
  Corpus test;

  const Corpus &of(Split split) const;
};

// Materializes the splits with dropped pairs removed.
SplitCorpora ApplySplit(const Corpus &corpus, const SplitAssignment &assignment);

// Per-instance membership, as produced by property-centric random splits
// where one article may land in several splits.
struct InstanceMembership {
  std::string article_id;
  std::string property;
  Split split;
};

// Assigns every (article, property) instance independently at random.
std::vector<InstanceMembership> RandomInstanceSplit(const Corpus &corpus,
                                                    double validation_fraction,
                                                    double test_fraction,
                                                    uint64_t seed);

struct OverlapStat {
  Split source;
  Split target;
  // Distinct articles of `target` that also occur in `source`.
  size_t article_overlap_count = 0;
  size_t target_articles = 0;
  double article_overlap_percent = 0.0;
  // Same statistic counted over instances of `target`.
  size_t leaked_instances = 0;
  size_t target_instances = 0;
};

struct AuditReport {
  std::array<size_t, 3> articles{};
  std::array<size_t, 3> instances{};
  // (train, validation), (train, test), (validation, test).
  std::vector<OverlapStat> overlaps;
  std::array<std::set<std::string>, 3> properties;
  size_t property_inventory = 0;
  size_t unseen_in_train_count = 0;
  double unseen_in_train_fraction = 0.0;
  // Retained pairs that break a held-out constraint.
  size_t heldout_violations = 0;
};

AuditReport AuditSplit(const Corpus &corpus, const SplitAssignment &assignment);
AuditReport AuditMembership(const Corpus &corpus,
                            const std::vector<InstanceMembership> &membership);

std::string FormatAuditTable(const AuditReport &report);
std::string AuditReportJson(const AuditReport &report);

// Assignment file: one JSON line per article with "article_id" and "split".
// Sidecar: one JSON object with the held-out property sets and dropped pairs.
void WriteAssignment(const SplitAssignment &assignment,
                     const std::filesystem::path &assignment_path,
                     const std::filesystem::path &sidecar_path);
SplitAssignment ReadAssignment(const std::filesystem::path &assignment_path,
                               const std::filesystem::path &sidecar_path);

void WriteMembership(const std::vector<InstanceMembership> &membership,
                     const std::filesystem::path &path);
std::vector<InstanceMembership> ReadMembership(const std::filesystem::path &path);

}  // namespace mpe

#endif  // MPE_SPLITTER_SPLIT_H_
