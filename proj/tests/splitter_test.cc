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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "mpe/base/error.h"
#include "mpe/base/random.h"
#include "mpe/corpus/synthetic.h"
#include "mpe/splitter/split.h"
#include "test_util.h"

namespace mpe {
namespace {

using PairSet = std::set<std::pair<std::string, std::string>>;

PairSet PairsOf(const MpeRecord &record) {
  PairSet out;
  for (const auto &p : record.pairs) out.insert({p.property, p.value});
  return out;
}

// Oracle: retained (article, property) pairs per split, computed from the
// assignment alone.
struct Retained {
  std::array<std::set<std::string>, 3> articles;
  std::array<std::set<std::string>, 3> properties;
};

Retained RetainedBySplit(const Corpus &corpus, const SplitAssignment &assignment) {
  std::set<std::tuple<std::string, std::string, std::string>> dropped;
  for (const auto &d : assignment.dropped_pairs) {
    dropped.insert({d.article_id, d.pair.property, d.pair.value});
  }
  Retained out;
  for (const auto &record : corpus) {
    const int s = static_cast<int>(assignment.split_of.at(record.article_id));
    for (const auto &p : record.pairs) {
      if (dropped.count({record.article_id, p.property, p.value})) continue;
      out.articles[s].insert(record.article_id);
      out.properties[s].insert(p.property);
    }
  }
  return out;
}

// Corpus with `properties` labels p00.. and skewed frequencies.
Corpus ToyCorpus(size_t articles, size_t properties, uint64_t seed) {
  Rng rng(seed);
  std::vector<double> weights;
  for (size_t p = 0; p < properties; ++p) weights.push_back(1.0 / (1.0 + p));
  Corpus corpus;
  for (size_t a = 0; a < articles; ++a) {
    MpeRecord record;
    record.article_id = "a" + std::to_string(a);
    record.text = "text " + std::to_string(a);
    std::set<size_t> chosen;
    // Guarantee every property occurs at least twice.
    chosen.insert(a % properties);
    const size_t k = 1 + rng.UniformInt(0, 3);
    while (chosen.size() < std::min(k, properties)) chosen.insert(rng.Categorical(weights));
    for (size_t p : chosen) {
      char name[8];
      std::snprintf(name, sizeof(name), "p%02zu", p);
      record.pairs.push_back({name, "v" + std::to_string(rng.UniformInt(0, 4))});
    }
    corpus.push_back(std::move(record));
  }
  return corpus;
}

SplitConfig NoTopUp() {
  SplitConfig config;
  config.seen_articles_per_eval_split = 0;
  return config;
}

TEST(MergeTest, UnionOfPairs) {
  Corpus merged = MergeSingleToMpe({{"a1", "t", "p", {"v1"}}, {"a1", "t", "q", {"v2"}}});
  ASSERT_EQ(merged.size(), 1u);
  EXPECT_EQ(PairsOf(merged[0]), (PairSet{{"p", "v1"}, {"q", "v2"}}));
}

TEST(MergeTest, SingleInputIsIdentity) {
  Corpus merged = MergeSingleToMpe({{"a1", "t", "p", {"v1"}}});
  ASSERT_EQ(merged.size(), 1u);
  EXPECT_EQ(merged[0].article_id, "a1");
  EXPECT_EQ(merged[0].text, "t");
  EXPECT_EQ(PairsOf(merged[0]), (PairSet{{"p", "v1"}}));
}

TEST(MergeTest, DuplicateInputsCollapse) {
  Corpus merged = MergeSingleToMpe({{"a1", "t", "p", {"v1"}}, {"a1", "t", "p", {"v1"}}});
  ASSERT_EQ(merged.size(), 1u);
  EXPECT_EQ(merged[0].pairs.size(), 1u);
}

TEST(MergeTest, ConflictingTextsNameTheArticle) {
  try {
    MergeSingleToMpe({{"a7", "one", "p", {"v"}}, {"a7", "two", "q", {"w"}}});
    FAIL();
  } catch (const Error &e) {
    EXPECT_NE(std::string(e.what()).find("a7"), std::string::npos);
  }
}

TEST(MergeTest, InputOrderDoesNotChangeContent) {
  std::vector<SinglePropertyRecord> singles = {
      {"a1", "t1", "p", {"v1"}}, {"a2", "t2", "q", {"w"}}, {"a1", "t1", "q", {"v2"}}};
  Corpus forward = MergeSingleToMpe(singles);
  std::reverse(singles.begin(), singles.end());
  Corpus backward = MergeSingleToMpe(singles);
  std::map<std::string, PairSet> f, b;
  for (const auto &r : forward) f[r.article_id] = PairsOf(r);
  for (const auto &r : backward) b[r.article_id] = PairsOf(r);
  EXPECT_EQ(f, b);
}

TEST(ReduceTest, GroupsValuesByProperty) {
  MpeRecord record{"a1", "t", {{"p", "v1"}, {"p", "v2"}, {"q", "w"}}};
  auto singles = ReduceToSingle(record);
  ASSERT_EQ(singles.size(), 2u);
  EXPECT_EQ(singles[0].property, "p");
  EXPECT_EQ(singles[0].values, (std::vector<std::string>{"v1", "v2"}));
  EXPECT_EQ(singles[1].property, "q");
  EXPECT_EQ(singles[1].values, (std::vector<std::string>{"w"}));
}

TEST(ReduceTest, SinglePairRecord) {
  EXPECT_EQ(ReduceToSingle({"a1", "t", {{"p", "v"}}}).size(), 1u);
}

TEST(ReduceTest, RoundTripOverSyntheticCorpus) {
  GeneratorConfig config;
  config.article_count = 100;
  Corpus corpus = GenerateSynthetic(config, 3).records;
  std::vector<SinglePropertyRecord> singles;
  for (const auto &record : corpus) {
    for (auto &s : ReduceToSingle(record)) singles.push_back(std::move(s));
  }
  Rng rng(11);
  rng.Shuffle(singles.begin(), singles.end());
  Corpus merged = MergeSingleToMpe(singles);
  ASSERT_EQ(merged.size(), corpus.size());
  std::map<std::string, PairSet> expected, actual;
  for (const auto &r : corpus) expected[r.article_id] = PairsOf(r);
  for (const auto &r : merged) actual[r.article_id] = PairsOf(r);
  EXPECT_EQ(expected, actual);
}

TEST(ControlledSplitTest, TenPropertiesGiveTwoTestOnly) {
  Corpus corpus = ToyCorpus(80, 10, 5);
  SplitConfig config = NoTopUp();
  config.test_only_property_fraction = 0.2;
  config.val_only_property_fraction = 0.0;
  config.shared_valtest_property_fraction = 0.0;
  SplitAssignment assignment = ControlledSplit(corpus, config);
  EXPECT_EQ(assignment.test_only_properties.size(), 2u);

  Retained r = RetainedBySplit(corpus, assignment);
  std::set<std::string> only_in_test;
  for (const auto &p : r.properties[2]) {
    if (!r.properties[0].count(p) && !r.properties[1].count(p)) only_in_test.insert(p);
  }
  EXPECT_EQ(only_in_test.size(), 2u);
  EXPECT_EQ(only_in_test, assignment.test_only_properties);
}

TEST(ControlledSplitTest, DegenerateConfigKeepsEverythingInTrain) {
  Corpus corpus = ToyCorpus(30, 6, 2);
  SplitConfig config;
  config.test_only_property_fraction = 0.0;
  config.val_only_property_fraction = 0.0;
  config.shared_valtest_property_fraction = 0.0;
  config.seen_articles_per_eval_split = 0;
  SplitAssignment assignment = ControlledSplit(corpus, config);
  for (const auto &[id, split] : assignment.split_of) EXPECT_EQ(split, Split::kTrain) << id;
  EXPECT_TRUE(assignment.dropped_pairs.empty());
  SplitCorpora splits = ApplySplit(corpus, assignment);
  EXPECT_EQ(splits.train.size(), corpus.size());
  EXPECT_TRUE(splits.validation.empty());
  EXPECT_TRUE(splits.test.empty());
}

TEST(ControlledSplitTest, DefaultConfigOnSyntheticCorpus) {
  GeneratorConfig gen;
  Corpus corpus = GenerateSynthetic(gen, 1).records;
  SplitAssignment assignment = ControlledSplit(corpus, SplitConfig::ScaledTo(corpus.size()));
  AuditReport report = AuditSplit(corpus, assignment);
  for (const auto &o : report.overlaps) EXPECT_EQ(o.article_overlap_count, 0u);

  Retained r = RetainedBySplit(corpus, assignment);
  const auto &test = r.properties[2];
  size_t unseen = 0;
  for (const auto &p : test) unseen += r.properties[0].count(p) == 0;
  EXPECT_GE(static_cast<double>(unseen) / test.size(), 0.2 + 0.1 - 1e-12);
  EXPECT_EQ(report.heldout_violations, 0u);
}

TEST(ControlledSplitTest, RejectsTinyCorpora) {
  EXPECT_THROW(ControlledSplit(ToyCorpus(2, 4, 1), SplitConfig{}), Error);
  EXPECT_THROW(ControlledSplit(ToyCorpus(20, 3, 1), SplitConfig{}), Error);
}

TEST(ControlledSplitTest, CapViolationAsksToShrink) {
  Corpus corpus = ToyCorpus(60, 10, 4);
  SplitConfig config = NoTopUp();
  config.max_eval_split_articles = 1;
  try {
    ControlledSplit(corpus, config);
    FAIL();
  } catch (const Error &e) {
    EXPECT_NE(std::string(e.what()).find("shrink"), std::string::npos);
  }
}

TEST(ControlledSplitTest, InfeasibleFractions) {
  // Every article holds all four properties, so holding any out empties train.
  Corpus corpus;
  for (int a = 0; a < 5; ++a) {
    corpus.push_back({"a" + std::to_string(a), "t", {{"p", "x"}, {"q", "x"}, {"r", "x"}, {"s", "x"}}});
  }
  EXPECT_THROW(ControlledSplit(corpus, NoTopUp()), Error);
  SplitConfig too_much = NoTopUp();
  too_much.test_only_property_fraction = 0.6;
  too_much.val_only_property_fraction = 0.6;
  EXPECT_THROW(ControlledSplit(ToyCorpus(40, 8, 1), too_much), Error);
}

TEST(ControlledSplitTest, PropertiesOverRandomDraws) {
  Rng rng(2024);
  int exercised = 0;
  for (int draw = 0; draw < 20; ++draw) {
    const size_t properties = 8 + rng.UniformInt(0, 24);
    Corpus corpus = ToyCorpus(100 + rng.UniformInt(0, 200), properties, rng.Next());
    SplitConfig config;
    config.test_only_property_fraction = 0.05 * rng.UniformInt(0, 4);
    config.val_only_property_fraction = 0.05 * rng.UniformInt(0, 4);
    config.shared_valtest_property_fraction = 0.05 * rng.UniformInt(0, 2);
    config.seen_articles_per_eval_split = rng.UniformInt(0, 10);
    config.max_eval_split_articles = corpus.size();
    config.seed = rng.Next();
    SplitAssignment assignment;
    try {
      assignment = ControlledSplit(corpus, config);
    } catch (const Error &) {
      continue;
    }
    ++exercised;
    // Determinism.
    SplitAssignment again = ControlledSplit(corpus, config);
    EXPECT_EQ(assignment.split_of, again.split_of);
    EXPECT_EQ(assignment.test_only_properties, again.test_only_properties);

    // Partition.
    ASSERT_EQ(assignment.split_of.size(), corpus.size());
    Retained r = RetainedBySplit(corpus, assignment);
    for (int i = 0; i < 3; ++i) {
      for (int j = i + 1; j < 3; ++j) {
        for (const auto &id : r.articles[i]) EXPECT_FALSE(r.articles[j].count(id));
      }
    }
    // Held-out soundness.
    for (const auto &p : r.properties[0]) {
      EXPECT_FALSE(assignment.test_only_properties.count(p));
      EXPECT_FALSE(assignment.val_only_properties.count(p));
      EXPECT_FALSE(assignment.shared_valtest_properties.count(p));
    }
    for (const auto &p : r.properties[1]) EXPECT_FALSE(assignment.test_only_properties.count(p));
    for (const auto &p : r.properties[2]) EXPECT_FALSE(assignment.val_only_properties.count(p));

    // Unseen-in-train within one property of the configured total.
    const double configured = (config.test_only_property_fraction +
                               config.val_only_property_fraction +
                               config.shared_valtest_property_fraction) *
                              properties;
    const size_t unseen = properties - r.properties[0].size();
    EXPECT_LE(std::abs(static_cast<double>(unseen) - configured), 1.0);
    AuditReport report = AuditSplit(corpus, assignment);
    EXPECT_EQ(report.unseen_in_train_count, unseen);
    EXPECT_EQ(report.heldout_violations, 0u);
  }
  EXPECT_GE(exercised, 15) << "too many infeasible draws";
}

TEST(AuditTest, DisjointSplitsHaveNoOverlap) {
  Corpus corpus = ToyCorpus(9, 4, 1);
  SplitAssignment assignment;
  for (size_t i = 0; i < corpus.size(); ++i) {
    assignment.split_of[corpus[i].article_id] = static_cast<Split>(i % 3);
  }
  AuditReport report = AuditSplit(corpus, assignment);
  ASSERT_EQ(report.overlaps.size(), 3u);
  for (const auto &o : report.overlaps) {
    EXPECT_EQ(o.article_overlap_count, 0u);
    EXPECT_EQ(o.article_overlap_percent, 0.0);
  }
  EXPECT_NE(FormatAuditTable(report).find("0.00"), std::string::npos);
}

TEST(AuditTest, ValidationIdenticalToTrainIsFullOverlap) {
  Corpus corpus = ToyCorpus(10, 4, 1);
  std::vector<InstanceMembership> membership;
  for (const auto &record : corpus) {
    membership.push_back({record.article_id, record.pairs[0].property, Split::kTrain});
    membership.push_back({record.article_id, record.pairs[0].property, Split::kValidation});
  }
  AuditReport report = AuditMembership(corpus, membership);
  EXPECT_EQ(report.overlaps[0].source, Split::kTrain);
  EXPECT_EQ(report.overlaps[0].target, Split::kValidation);
  EXPECT_DOUBLE_EQ(report.overlaps[0].article_overlap_percent, 100.0);
}

TEST(AuditTest, MissingArticleIsAnError) {
  Corpus corpus = ToyCorpus(5, 4, 1);
  SplitAssignment assignment;
  assignment.split_of[corpus[0].article_id] = Split::kTrain;
  EXPECT_THROW(AuditSplit(corpus, assignment), Error);
}

TEST(AuditTest, RandomInstanceSplitMatchesIntersectionOracle) {
  GeneratorConfig gen;
  gen.article_count = 300;
  Corpus corpus = GenerateSynthetic(gen, 9).records;
  auto membership = RandomInstanceSplit(corpus, 0.1, 0.1, 4);
  AuditReport report = AuditMembership(corpus, membership);

  std::array<std::set<std::string>, 3> ids;
  for (const auto &m : membership) ids[static_cast<int>(m.split)].insert(m.article_id);
  const std::array<std::pair<int, int>, 3> pairs = {std::pair{0, 1}, {0, 2}, {1, 2}};
  for (int k = 0; k < 3; ++k) {
    std::vector<std::string> common;
    std::set_intersection(ids[pairs[k].first].begin(), ids[pairs[k].first].end(),
                          ids[pairs[k].second].begin(), ids[pairs[k].second].end(),
                          std::back_inserter(common));
    const double percent = 100.0 * common.size() / ids[pairs[k].second].size();
    EXPECT_EQ(report.overlaps[k].article_overlap_count, common.size());
    EXPECT_EQ(report.overlaps[k].article_overlap_percent, percent);
  }
  // The property-centric split leaks most evaluation articles into train.
  EXPECT_GT(report.overlaps[1].article_overlap_percent, 50.0);
}

TEST(SplitIoTest, AssignmentRoundTrip) {
  testing_util::TempDir dir;
  Corpus corpus = ToyCorpus(60, 10, 8);
  SplitAssignment assignment = ControlledSplit(corpus, NoTopUp());
  WriteAssignment(assignment, dir.path() / "a.jsonl", dir.path() / "a.json");
  SplitAssignment loaded = ReadAssignment(dir.path() / "a.jsonl", dir.path() / "a.json");
  EXPECT_EQ(loaded.split_of, assignment.split_of);
  EXPECT_EQ(loaded.test_only_properties, assignment.test_only_properties);
  EXPECT_EQ(loaded.val_only_properties, assignment.val_only_properties);
  EXPECT_EQ(loaded.shared_valtest_properties, assignment.shared_valtest_properties);
  ASSERT_EQ(loaded.dropped_pairs.size(), assignment.dropped_pairs.size());
  for (size_t i = 0; i < loaded.dropped_pairs.size(); ++i) {
    EXPECT_EQ(loaded.dropped_pairs[i].pair, assignment.dropped_pairs[i].pair);
    EXPECT_EQ(loaded.dropped_pairs[i].reason, assignment.dropped_pairs[i].reason);
  }
}

TEST(SplitIoTest, MembershipRoundTripAndBadSplitName) {
  testing_util::TempDir dir;
  std::vector<InstanceMembership> m = {{"a", "p", Split::kTest}, {"b", "q", Split::kTrain}};
  WriteMembership(m, dir.path() / "m.jsonl");
  auto loaded = ReadMembership(dir.path() / "m.jsonl");
  ASSERT_EQ(loaded.size(), 2u);
  EXPECT_EQ(loaded[0].split, Split::kTest);
  testing_util::WriteFile(dir.path() / "bad.jsonl",
                          "{\"article_id\":\"a\",\"property\":\"p\",\"split\":\"nope\"}\n");
  EXPECT_THROW(ReadMembership(dir.path() / "bad.jsonl"), Error);
}

}  // namespace
}  // namespace mpe
