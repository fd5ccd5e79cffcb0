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

#include "mpe/splitter/split.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "mpe/base/error.h"
#include "mpe/base/random.h"

namespace mpe {
namespace {

enum class HeldOut { kNone, kTestOnly, kValOnly, kShared };

// Largest-remainder apportionment of round(total * n) properties across the
// three held-out sets, so the held-out total is within half a property of
// the configured total.
std::array<size_t, 3> HeldOutCounts(const SplitConfig &config, size_t n) {
  const std::array<double, 3> fractions = {config.test_only_property_fraction,
                                           config.val_only_property_fraction,
                                           config.shared_valtest_property_fraction};
  double total_fraction = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0 && f <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "held-out fractions must lie in [0, 1]");
    }
    total_fraction += f;
  }
  if (total_fraction > 1.0 + 1e-12) {
    throw Error(ErrorCode::kInvalidArgument, "held-out fractions sum above 1");
  }
  const size_t total = static_cast<size_t>(std::llround(total_fraction * n));
  std::array<size_t, 3> counts{};
  std::array<double, 3> remainders{};
  size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = fractions[i] * n;
    counts[i] = static_cast<size_t>(std::floor(exact));
    remainders[i] = exact - std::floor(exact);
    assigned += counts[i];
  }
  while (assigned < total) {
    int best = -1;
    for (int i = 0; i < 3; ++i) {
      if (fractions[i] == 0.0) continue;
      if (best < 0 || remainders[i] > remainders[best]) best = i;
    }
    if (best < 0) break;
    ++counts[best];
    remainders[best] = -1.0;
    ++assigned;
  }
  while (assigned > total) {
    int worst = -1;
    for (int i = 0; i < 3; ++i) {
      if (counts[i] == 0) continue;
      if (worst < 0 || remainders[i] < remainders[worst]) worst = i;
    }
    --counts[worst];
    remainders[worst] = 2.0;
    --assigned;
  }
  return counts;
}

}  // namespace

const char *SplitName(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kValidation:
      return "validation";
    case Split::kTest:
      return "test";
  }
  return "unknown";
}

Split ParseSplit(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "validation" || name == "dev") return Split::kValidation;
  if (name == "test") return Split::kTest;
  throw Error(ErrorCode::kParse, "unknown split '" + std::string(name) + "'");
}

Corpus MergeSingleToMpe(const std::vector<SinglePropertyRecord> &records) {
  Corpus out;
  std::unordered_map<std::string, size_t> index;
  std::vector<std::set<PropertyValuePair>> seen;
  for (const auto &single : records) {
    if (single.values.empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "single-property record for '" + single.article_id + "' has no value");
    }
    auto [it, inserted] = index.try_emplace(single.article_id, out.size());
    if (inserted) {
      out.push_back({single.article_id, single.text, {}});
      seen.emplace_back();
    } else if (out[it->second].text != single.text) {
      throw Error(ErrorCode::kInvalidArgument,
                  "conflicting texts for article '" + single.article_id + "'");
    }
    MpeRecord &record = out[it->second];
    for (const auto &value : single.values) {
      PropertyValuePair pair{single.property, value};
      if (seen[it->second].insert(pair).second) record.pairs.push_back(std::move(pair));
    }
  }
  return out;
}

std::vector<SinglePropertyRecord> ReduceToSingle(const MpeRecord &record) {
  std::vector<SinglePropertyRecord> out;
  std::unordered_map<std::string, size_t> index;
  for (const auto &pair : record.pairs) {
    auto [it, inserted] = index.try_emplace(pair.property, out.size());
    if (inserted) out.push_back({record.article_id, record.text, pair.property, {}});
    auto &values = out[it->second].values;
    if (std::find(values.begin(), values.end(), pair.value) == values.end()) {
      values.push_back(pair.value);
    }
  }
  return out;
}

SplitConfig SplitConfig::ScaledTo(size_t articles) {
  SplitConfig config;
  config.max_eval_split_articles =
      std::max<size_t>(1, static_cast<size_t>(std::ceil(0.4 * static_cast<double>(articles))));
  config.seen_articles_per_eval_split =
      static_cast<size_t>(std::llround(0.05 * static_cast<double>(articles)));
  return config;
}

SplitAssignment ControlledSplit(const Corpus &corpus, const SplitConfig &config) {
  if (corpus.size() < 3) {
    throw Error(ErrorCode::kFailedPrecondition, "controlled split needs at least 3 articles");
  }
  // Property index: id -> name, frequency, containing articles.
  std::map<std::string, size_t> property_id;
  for (const auto &record : corpus) {
    for (const auto &pair : record.pairs) property_id.try_emplace(pair.property, 0);
  }
  std::vector<std::string> names;
  for (auto &[name, id] : property_id) {
    id = names.size();
    names.push_back(name);
  }
  const size_t n = names.size();
  if (n < 4) {
    throw Error(ErrorCode::kFailedPrecondition,
                "controlled split needs at least 4 distinct properties");
  }
  std::vector<size_t> frequency(n, 0);
  std::vector<std::vector<size_t>> articles_of(n);
  std::vector<std::vector<size_t>> properties_of(corpus.size());
  for (size_t a = 0; a < corpus.size(); ++a) {
    for (const auto &pair : corpus[a].pairs) {
      const size_t p = property_id.at(pair.property);
      ++frequency[p];
      if (properties_of[a].empty() || std::find(properties_of[a].begin(), properties_of[a].end(), p) ==
                                          properties_of[a].end()) {
        properties_of[a].push_back(p);
        articles_of[p].push_back(a);
      }
    }
  }

  const std::array<size_t, 3> quota = HeldOutCounts(config, n);
  const size_t heldout_total = quota[0] + quota[1] + quota[2];
  if (heldout_total > 0 && heldout_total >= n) {
    throw Error(ErrorCode::kInvalidArgument,
                "held-out fractions leave no property for training with " +
                    std::to_string(n) + " properties");
  }

  // (1) ascending frequency, ties by name.
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return frequency[a] < frequency[b]; });

  // (2) greedy designation. An article stays a train candidate while it
  // holds no designated property; every undesignated property must keep at
  // least one train candidate, otherwise it would silently become unseen.
  std::vector<HeldOut> designation(n, HeldOut::kNone);
  std::vector<bool> train_candidate(corpus.size(), true);
  std::vector<size_t> train_support(n, 0);
  for (size_t p = 0; p < n; ++p) train_support[p] = articles_of[p].size();

  constexpr std::array<HeldOut, 3> kCycle = {HeldOut::kTestOnly, HeldOut::kValOnly,
                                             HeldOut::kShared};
  std::array<size_t, 3> filled{};
  size_t next_set = 0;
  auto remaining = [&] { return heldout_total - (filled[0] + filled[1] + filled[2]); };
  for (size_t candidate : order) {
    if (remaining() == 0) break;
    // Which articles would leave the train pool.
    std::unordered_map<size_t, size_t> loss;
    for (size_t a : articles_of[candidate]) {
      if (!train_candidate[a]) continue;
      for (size_t q : properties_of[a]) {
        if (q != candidate) ++loss[q];
      }
    }
    bool feasible = true;
    for (const auto &[q, lost] : loss) {
      if (designation[q] == HeldOut::kNone && train_support[q] <= lost) {
        feasible = false;
        break;
      }
    }
    if (!feasible) continue;
    while (filled[next_set] == quota[next_set]) next_set = (next_set + 1) % 3;
    designation[candidate] = kCycle[next_set];
    ++filled[next_set];
    next_set = (next_set + 1) % 3;
    for (size_t a : articles_of[candidate]) {
      if (!train_candidate[a]) continue;
      train_candidate[a] = false;
      for (size_t q : properties_of[a]) --train_support[q];
    }
  }
  if (remaining() > 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "held-out fractions are infeasible for this inventory: only " +
                    std::to_string(heldout_total - remaining()) + " of " +
                    std::to_string(heldout_total) +
                    " properties could be held out without removing another "
                    "property from training");
  }

  SplitAssignment assignment;
  for (size_t p = 0; p < n; ++p) {
    switch (designation[p]) {
      case HeldOut::kTestOnly:
        assignment.test_only_properties.insert(names[p]);
        break;
      case HeldOut::kValOnly:
        assignment.val_only_properties.insert(names[p]);
        break;
      case HeldOut::kShared:
        assignment.shared_valtest_properties.insert(names[p]);
        break;
      case HeldOut::kNone:
        break;
    }
  }

  // (3) drafted articles. Shared-only articles alternate in a seeded order.
  Rng rng(config.seed);
  std::vector<size_t> visit(corpus.size());
  std::iota(visit.begin(), visit.end(), 0);
  rng.Shuffle(visit.begin(), visit.end());
  std::vector<Split> split(corpus.size(), Split::kTrain);
  std::array<size_t, 3> sizes{};
  bool shared_to_test = true;
  for (size_t a : visit) {
    bool test_only = false, val_only = false, shared = false;
    for (size_t p : properties_of[a]) {
      test_only |= designation[p] == HeldOut::kTestOnly;
      val_only |= designation[p] == HeldOut::kValOnly;
      shared |= designation[p] == HeldOut::kShared;
    }
    if (test_only) {
      split[a] = Split::kTest;
    } else if (val_only) {
      split[a] = Split::kValidation;
    } else if (shared) {
      split[a] = shared_to_test ? Split::kTest : Split::kValidation;
      shared_to_test = !shared_to_test;
    }
    ++sizes[static_cast<int>(split[a])];
  }

  // (4) seen-property top-ups, alternating test and validation.
  std::array<size_t, 3> topped{};
  Split next_topup = Split::kTest;
  for (size_t a : visit) {
    if (topped[1] >= config.seen_articles_per_eval_split &&
        topped[2] >= config.seen_articles_per_eval_split) {
      break;
    }
    if (!train_candidate[a]) continue;
    bool keeps_support = true;
    for (size_t p : properties_of[a]) keeps_support &= train_support[p] > 1;
    if (!keeps_support) continue;
    if (topped[static_cast<int>(next_topup)] >= config.seen_articles_per_eval_split) {
      next_topup = next_topup == Split::kTest ? Split::kValidation : Split::kTest;
    }
    split[a] = next_topup;
    train_candidate[a] = false;
    for (size_t p : properties_of[a]) --train_support[p];
    ++topped[static_cast<int>(next_topup)];
    --sizes[0];
    ++sizes[static_cast<int>(next_topup)];
    next_topup = next_topup == Split::kTest ? Split::kValidation : Split::kTest;
  }

  for (Split s : {Split::kValidation, Split::kTest}) {
    if (sizes[static_cast<int>(s)] > config.max_eval_split_articles) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::string("the ") + SplitName(s) + " split would hold " +
                      std::to_string(sizes[static_cast<int>(s)]) +
                      " articles, above the cap of " +
                      std::to_string(config.max_eval_split_articles) +
                      "; shrink the held-out fractions or the seen-article top-up");
    }
  }

  // (5)-(6) everything else is train; drop pairs the split forbids.
  for (size_t a = 0; a < corpus.size(); ++a) {
    assignment.split_of[corpus[a].article_id] = split[a];
    for (const auto &pair : corpus[a].pairs) {
      const HeldOut h = designation[property_id.at(pair.property)];
      const char *reason = nullptr;
      if (split[a] == Split::kTrain && h != HeldOut::kNone) {
        reason = "held-out property in train article";
      } else if (split[a] == Split::kValidation && h == HeldOut::kTestOnly) {
        reason = "test-only property in validation article";
      } else if (split[a] == Split::kTest && h == HeldOut::kValOnly) {
        reason = "validation-only property in test article";
      }
      if (reason) assignment.dropped_pairs.push_back({corpus[a].article_id, pair, reason});
    }
  }
  return assignment;
}

const Corpus &SplitCorpora::of(Split split) const {
  switch (split) {
    case Split::kTrain:
      return train;
    case Split::kValidation:
      return validation;
    case Split::kTest:
      return test;
  }
  return train;
}

SplitCorpora ApplySplit(const Corpus &corpus, const SplitAssignment &assignment) {
  std::map<std::string, std::set<PropertyValuePair>> dropped;
  for (const auto &d : assignment.dropped_pairs) dropped[d.article_id].insert(d.pair);
  SplitCorpora out;
  for (const auto &record : corpus) {
    auto it = assignment.split_of.find(record.article_id);
    if (it == assignment.split_of.end()) {
      throw Error(ErrorCode::kNotFound,
                  "article '" + record.article_id + "' missing from split assignment");
    }
    MpeRecord kept = record;
    auto d = dropped.find(record.article_id);
    if (d != dropped.end()) {
      std::erase_if(kept.pairs, [&](const PropertyValuePair &p) { return d->second.count(p) > 0; });
    }
    if (kept.pairs.empty()) continue;
    switch (it->second) {
      case Split::kTrain:
        out.train.push_back(std::move(kept));
        break;
      case Split::kValidation:
        out.validation.push_back(std::move(kept));
        break;
      case Split::kTest:
        out.test.push_back(std::move(kept));
        break;
    }
  }
  return out;
}

std::vector<InstanceMembership> RandomInstanceSplit(const Corpus &corpus,
                                                    double validation_fraction,
                                                    double test_fraction,
                                                    uint64_t seed) {
  if (validation_fraction < 0 || test_fraction < 0 || validation_fraction + test_fraction > 1) {
    throw Error(ErrorCode::kInvalidArgument, "invalid random split fractions");
  }
  Rng rng(seed);
  std::vector<InstanceMembership> out;
  for (const auto &record : corpus) {
    for (const auto &single : ReduceToSingle(record)) {
      const double u = rng.UniformReal();
      Split s = Split::kTrain;
      if (u < test_fraction) {
        s = Split::kTest;
      } else if (u < test_fraction + validation_fraction) {
        s = Split::kValidation;
      }
      out.push_back({record.article_id, single.property, s});
    }
  }
  return out;
}

}  // namespace mpe
