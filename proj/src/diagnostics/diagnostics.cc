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

#include "mpe/diagnostics/diagnostics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <set>
#include <unordered_map>

#include "mpe/base/error.h"

namespace mpe {
namespace {

// True when `needle` occurs as a contiguous run of `haystack`.
bool ContainsRun(const std::vector<std::string> &haystack,
                 const std::vector<std::string> &needle) {
  if (needle.empty() || needle.size() > haystack.size()) return false;
  return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) !=
         haystack.end();
}

struct ArticleTokens {
  std::vector<std::string> tokens;
  size_t words = 0;
};

ArticleTokens TokenizeArticle(std::string_view text, const NormalizationPolicy &policy) {
  return {BoundaryTokens(Normalize(text, policy)), CountWords(text)};
}

bool MatchesTokens(std::string_view value, const ArticleTokens &article,
                   const NormalizationPolicy &policy) {
  return ContainsRun(article.tokens, BoundaryTokens(Normalize(value, policy)));
}

}  // namespace

const PropertyStats::Entry *PropertyStats::Find(const std::string &property) const {
  auto it = properties.find(property);
  return it == properties.end() ? nullptr : &it->second;
}

PropertyStats ComputePropertyStats(const Corpus &train, FrequencyCounting counting) {
  PropertyStats stats;
  for (const auto &record : train) {
    std::set<std::string> seen;
    for (const auto &pair : record.pairs) {
      auto &entry = stats.properties[pair.property];
      ++entry.value_counts[pair.value];
      if (counting == FrequencyCounting::kInstances || seen.insert(pair.property).second) {
        ++entry.train_frequency;
      }
    }
  }
  return stats;
}

double NormalizedEntropy(std::span<const int64_t> counts) {
  if (counts.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "normalized entropy of an empty distribution");
  }
  double total = 0.0;
  for (int64_t c : counts) {
    if (c <= 0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "normalized entropy needs positive counts, got " + std::to_string(c));
    }
    total += static_cast<double>(c);
  }
  if (counts.size() == 1) return 0.0;
  double h = 0.0;
  for (int64_t c : counts) {
    const double p = static_cast<double>(c) / total;
    h -= p * std::log2(p);
  }
  return std::clamp(h / std::log2(static_cast<double>(counts.size())), 0.0, 1.0);
}

double NormalizedEntropy(const std::map<std::string, size_t> &value_counts) {
  std::vector<int64_t> counts;
  counts.reserve(value_counts.size());
  for (const auto &[value, c] : value_counts) counts.push_back(static_cast<int64_t>(c));
  return NormalizedEntropy(counts);
}

void DiagnosticThresholds::Validate() const {
  if (rare_max < 1) throw Error(ErrorCode::kInvalidArgument, "rare threshold must be at least 1");
  if (!(entropy_threshold > 0.0 && entropy_threshold < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "entropy threshold must lie in (0, 1)");
  }
  if (long_words && long_percentile) {
    throw Error(ErrorCode::kInvalidArgument,
                "absolute and percentile long-article thresholds are mutually exclusive");
  }
  if (long_percentile && !(*long_percentile > 0.0 && *long_percentile <= 100.0)) {
    throw Error(ErrorCode::kInvalidArgument, "long-article percentile must lie in (0, 100]");
  }
}

size_t ResolveLongWords(const DiagnosticThresholds &thresholds, const Corpus &train) {
  thresholds.Validate();
  if (thresholds.long_words) return *thresholds.long_words;
  if (!thresholds.long_percentile) return DiagnosticThresholds::kDefaultLongWords;
  if (train.empty()) {
    throw Error(ErrorCode::kFailedPrecondition, "percentile threshold needs a non-empty train split");
  }
  std::vector<size_t> lengths;
  lengths.reserve(train.size());
  for (const auto &record : train) lengths.push_back(CountWords(record.text));
  std::sort(lengths.begin(), lengths.end());
  const double rank = std::ceil(*thresholds.long_percentile / 100.0 * lengths.size());
  const size_t index = static_cast<size_t>(std::max(1.0, rank)) - 1;
  return lengths[std::min(index, lengths.size() - 1)];
}

PropertyFlags ClassifyProperty(const std::string &property, const PropertyStats &stats,
                               const DiagnosticThresholds &thresholds) {
  PropertyFlags flags;
  const PropertyStats::Entry *entry = stats.Find(property);
  const size_t frequency = entry ? entry->train_frequency : 0;
  flags.unseen = frequency == 0;
  flags.rare = frequency < thresholds.rare_max;
  if (entry && !entry->value_counts.empty()) {
    flags.entropy_defined = true;
    flags.entropy = NormalizedEntropy(entry->value_counts);
    flags.categorical = flags.entropy < thresholds.entropy_threshold;
  }
  return flags;
}

bool ExactMatch(std::string_view value, std::string_view article,
                const NormalizationPolicy &policy) {
  return MatchesTokens(value, TokenizeArticle(article, policy), policy);
}

InstanceFlags ClassifyInstance(const MpeRecord &record, const PropertyValuePair &pair,
                               size_t long_words, const NormalizationPolicy &policy) {
  return {ExactMatch(pair.value, record.text, policy), CountWords(record.text) > long_words};
}

const char *SubsetName(Subset subset) {
  switch (subset) {
    case Subset::kRare:
      return "rare";
    case Subset::kUnseen:
      return "unseen";
    case Subset::kCategorical:
      return "categorical";
    case Subset::kRelational:
      return "relational";
    case Subset::kExactMatch:
      return "exact_match";
    case Subset::kLongArticle:
      return "long_article";
  }
  return "unknown";
}

Subset ParseSubset(std::string_view name) {
  for (Subset s : kAllSubsets) {
    if (name == SubsetName(s)) return s;
  }
  throw Error(ErrorCode::kParse, "unknown diagnostic subset '" + std::string(name) + "'");
}

DiagnosticLabels LabelInstances(const Corpus &split, const PropertyStats &stats,
                                const DiagnosticThresholds &thresholds, size_t long_words,
                                const NormalizationPolicy &policy) {
  thresholds.Validate();
  std::unordered_map<std::string, PropertyFlags> cache;
  DiagnosticLabels labels;
  for (const auto &record : split) {
    const ArticleTokens article = TokenizeArticle(record.text, policy);
    const bool long_article = article.words > long_words;
    std::unordered_map<std::string, size_t> index;
    for (const auto &pair : record.pairs) {
      auto [it, inserted] = index.try_emplace(pair.property, labels.size());
      if (inserted) {
        auto c = cache.find(pair.property);
        if (c == cache.end()) {
          c = cache.emplace(pair.property, ClassifyProperty(pair.property, stats, thresholds))
                  .first;
        }
        InstanceLabel label{record.article_id, pair.property, {}};
        label.flags[static_cast<size_t>(Subset::kRare)] = c->second.rare;
        label.flags[static_cast<size_t>(Subset::kUnseen)] = c->second.unseen;
        label.flags[static_cast<size_t>(Subset::kCategorical)] = c->second.categorical;
        label.flags[static_cast<size_t>(Subset::kRelational)] = !c->second.categorical;
        label.flags[static_cast<size_t>(Subset::kLongArticle)] = long_article;
        labels.push_back(std::move(label));
      }
      bool &exact = labels[it->second].flags[static_cast<size_t>(Subset::kExactMatch)];
      exact = exact || MatchesTokens(pair.value, article, policy);
    }
  }
  return labels;
}

SubsetReport ComputeSubsetReport(const Corpus &split, const DiagnosticLabels &labels) {
  if (split.empty()) throw Error(ErrorCode::kFailedPrecondition, "subset report of an empty split");
  std::map<std::pair<std::string, std::string>, const InstanceLabel *> by_instance;
  for (const auto &label : labels) by_instance[{label.article_id, label.property}] = &label;

  std::array<double, kSubsetCount> sums{};
  size_t covered = 0;
  for (const auto &record : split) {
    std::set<std::string> properties;
    for (const auto &pair : record.pairs) properties.insert(pair.property);
    std::array<size_t, kSubsetCount> hits{};
    for (const auto &property : properties) {
      auto it = by_instance.find({record.article_id, property});
      if (it == by_instance.end()) {
        throw Error(ErrorCode::kNotFound, "no diagnostic label for instance (" +
                                              record.article_id + ", " + property + ")");
      }
      for (size_t s = 0; s < kSubsetCount; ++s) hits[s] += it->second->flags[s];
    }
    covered += properties.size();
    for (size_t s = 0; s < kSubsetCount; ++s) {
      sums[s] += 100.0 * static_cast<double>(hits[s]) / static_cast<double>(properties.size());
    }
  }
  if (covered != by_instance.size()) {
    throw Error(ErrorCode::kInvalidArgument, "labels include instances outside the split");
  }
  SubsetReport report;
  report.articles = split.size();
  for (size_t s = 0; s < kSubsetCount; ++s) report.percent[s] = sums[s] / split.size();
  return report;
}

std::string FormatSubsetTable(const SubsetReport &report) {
  static constexpr std::array<const char *, kSubsetCount> kRows = {
      "Rare", "Unseen", "Categorical", "Relational", "Exact match", "Long articles"};
  std::string out;
  char line[128];
  std::snprintf(line, sizeof(line), "%-16s %8s\n", "Subset", "Share %");
  out += line;
  for (size_t s = 0; s < kSubsetCount; ++s) {
    std::snprintf(line, sizeof(line), "%-16s %8.2f\n", kRows[s], report.percent[s]);
    out += line;
  }
  std::snprintf(line, sizeof(line), "%-16s %8zu\n", "Articles", report.articles);
  out += line;
  return out;
}

std::string SubsetReportJson(const SubsetReport &report) {
  nlohmann::json j;
  j["articles"] = report.articles;
  for (Subset s : kAllSubsets) j["percent"][SubsetName(s)] = report.percent[static_cast<size_t>(s)];
  return j.dump(2);
}

void WriteLabels(const DiagnosticLabels &labels, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  for (const auto &label : labels) {
    nlohmann::json j;
    j["article_id"] = label.article_id;
    j["property"] = label.property;
    for (Subset s : kAllSubsets) j[SubsetName(s)] = label.has(s);
    out << j.dump() << '\n';
  }
}

DiagnosticLabels ReadLabels(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot open " + path.string());
  DiagnosticLabels labels;
  std::string line;
  size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (Trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      InstanceLabel label{j.at("article_id").get<std::string>(),
                          j.at("property").get<std::string>(),
                          {}};
      for (Subset s : kAllSubsets) {
        label.flags[static_cast<size_t>(s)] = j.at(SubsetName(s)).get<bool>();
      }
      labels.push_back(std::move(label));
    } catch (const nlohmann::json::exception &e) {
      throw Error(ErrorCode::kParse, path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return labels;
}

std::vector<MatchSpan> ApproxMatch(std::string_view value, std::string_view article,
                                   size_t max_edit_distance) {
  const std::u32string v = ToUtf32(value);
  const std::u32string a = ToUtf32(article);
  if (v.empty()) throw Error(ErrorCode::kInvalidArgument, "approximate match of an empty value");
  const size_t m = v.size();
  const size_t k = max_edit_distance;

  std::vector<MatchSpan> candidates;
  std::vector<size_t> prev(m + 1), cur(m + 1);
  for (size_t start = 0; start < a.size(); ++start) {
    for (size_t j = 0; j <= m; ++j) prev[j] = j;
    const size_t max_len = std::min(a.size() - start, m + k);
    for (size_t len = 1; len <= max_len; ++len) {
      const char32_t c = a[start + len - 1];
      cur[0] = len;
      size_t row_min = cur[0];
      for (size_t j = 1; j <= m; ++j) {
        cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (c != v[j - 1])});
        row_min = std::min(row_min, cur[j]);
      }
      if (cur[m] <= k) candidates.push_back({start, start + len, cur[m]});
      std::swap(prev, cur);
      if (row_min > k) break;
    }
  }

  auto length_gap = [m](const MatchSpan &s) {
    const size_t len = s.end - s.start;
    return len > m ? len - m : m - len;
  };
  std::sort(candidates.begin(), candidates.end(), [&](const MatchSpan &x, const MatchSpan &y) {
    if (x.distance != y.distance) return x.distance < y.distance;
    if (length_gap(x) != length_gap(y)) return length_gap(x) < length_gap(y);
    if (x.start != y.start) return x.start < y.start;
    return x.end < y.end;
  });
  std::vector<MatchSpan> chosen;
  for (const auto &span : candidates) {
    const bool overlaps = std::any_of(chosen.begin(), chosen.end(), [&](const MatchSpan &c) {
      return span.start < c.end && c.start < span.end;
    });
    if (!overlaps) chosen.push_back(span);
  }
  return chosen;
}

}  // namespace mpe
