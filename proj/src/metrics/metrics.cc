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

#include "mpe/metrics/metrics.h"

#include <cstdio>
#include <json.hpp>

#include "mpe/base/error.h"

namespace mpe {
namespace {

double MeanOfF1(std::span<const ScoredSets> items, const char *what) {
  if (items.empty()) throw Error(ErrorCode::kInvalidArgument, std::string(what) + " of nothing");
  double sum = 0.0;
  for (const auto &item : items) sum += PairF1(item.expected, item.predicted).f1;
  return sum / static_cast<double>(items.size());
}

AnswerSet WithProperties(const AnswerSet &pairs, const std::set<std::string> &properties) {
  AnswerSet out;
  for (const auto &p : pairs) {
    if (properties.count(p.property)) out.insert(p);
  }
  return out;
}

}  // namespace

AnswerSet MakeAnswerSet(const std::vector<PropertyValuePair> &pairs,
                        const NormalizationPolicy &policy) {
  AnswerSet out;
  for (const auto &pair : pairs) {
    PropertyValuePair canonical{Normalize(pair.property, policy), Normalize(pair.value, policy)};
    if (canonical.property.empty() || canonical.value.empty()) continue;
    out.insert(std::move(canonical));
  }
  return out;
}

PrfScore PairF1(const AnswerSet &expected, const AnswerSet &predicted) {
  if (expected.empty() && predicted.empty()) return {1.0, 1.0, 1.0};
  size_t common = 0;
  for (const auto &p : predicted) common += expected.count(p);
  PrfScore s;
  s.precision = predicted.empty() ? 0.0 : static_cast<double>(common) / predicted.size();
  s.recall = expected.empty() ? 0.0 : static_cast<double>(common) / expected.size();
  const double denom = s.precision + s.recall;
  s.f1 = denom == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / denom;
  return s;
}

double MeanF1(std::span<const ScoredSets> instances) { return MeanOfF1(instances, "Mean-F1"); }

double MmpF1(std::span<const ScoredSets> articles) { return MeanOfF1(articles, "MMP-F1"); }

PredictionMap PredictionsFromRecords(const Corpus &predictions) {
  PredictionMap out;
  for (const auto &record : predictions) {
    auto &pairs = out[record.article_id];
    pairs.insert(pairs.end(), record.pairs.begin(), record.pairs.end());
  }
  return out;
}

PredictionMap LoadPredictions(const std::filesystem::path &path,
                              const NormalizationPolicy &policy) {
  return PredictionsFromRecords(LoadRecords(path, policy, {false, true}));
}

MetricReport BuildReport(const Corpus &split, const PredictionMap &predictions,
                         const DiagnosticLabels &labels, const NormalizationPolicy &policy) {
  std::map<std::pair<std::string, std::string>, const InstanceLabel *> by_instance;
  for (const auto &label : labels) by_instance[{label.article_id, label.property}] = &label;

  std::vector<ScoredSets> articles;
  std::vector<ScoredSets> instances;
  std::map<Subset, std::vector<ScoredSets>> subset_articles;
  for (const auto &record : split) {
    auto it = predictions.find(record.article_id);
    if (it == predictions.end()) {
      throw Error(ErrorCode::kNotFound, "no prediction for article '" + record.article_id + "'");
    }
    const AnswerSet expected = MakeAnswerSet(record.pairs, policy);
    const AnswerSet predicted = MakeAnswerSet(it->second, policy);
    articles.push_back({expected, predicted});

    std::vector<std::string> properties;
    for (const auto &pair : expected) {
      if (properties.empty() || properties.back() != pair.property) {
        properties.push_back(pair.property);
      }
    }
    for (const auto &property : properties) {
      instances.push_back({WithProperties(expected, {property}), WithProperties(predicted, {property})});
    }
    if (labels.empty()) continue;
    for (Subset subset : kAllSubsets) {
      std::set<std::string> flagged;
      for (const auto &property : properties) {
        auto l = by_instance.find({record.article_id, property});
        if (l == by_instance.end()) {
          throw Error(ErrorCode::kNotFound, "no diagnostic label for instance (" +
                                                record.article_id + ", " + property + ")");
        }
        if (l->second->has(subset)) flagged.insert(property);
      }
      if (flagged.empty()) continue;
      subset_articles[subset].push_back(
          {WithProperties(expected, flagged), WithProperties(predicted, flagged)});
    }
  }
  MetricReport report;
  report.n_articles = articles.size();
  report.n_instances = instances.size();
  report.mmp_f1 = MmpF1(articles);
  report.mean_f1 = MeanF1(instances);
  for (const auto &[subset, sets] : subset_articles) {
    report.per_subset[subset] = MmpF1(sets);
    report.per_subset_articles[subset] = sets.size();
  }
  return report;
}

std::string FormatMetricTable(const std::vector<std::pair<std::string, MetricReport>> &rows) {
  static constexpr std::array<Subset, 6> kColumns = {Subset::kUnseen,     Subset::kRare,
                                                     Subset::kCategorical, Subset::kRelational,
                                                     Subset::kExactMatch, Subset::kLongArticle};
  static constexpr std::array<const char *, 6> kHeaders = {"unseen",     "rare",        "categorical",
                                                           "relational", "exact match", "long"};
  size_t width = 5;
  for (const auto &[name, r] : rows) width = std::max(width, name.size());
  std::string out;
  char cell[64];
  std::snprintf(cell, sizeof(cell), "%-*s", static_cast<int>(width), "Model");
  out += cell;
  for (const char *h : kHeaders) {
    std::snprintf(cell, sizeof(cell), " %12s", h);
    out += cell;
  }
  out += "       MMP-F1      Mean-F1\n";
  for (const auto &[name, r] : rows) {
    std::snprintf(cell, sizeof(cell), "%-*s", static_cast<int>(width), name.c_str());
    out += cell;
    for (Subset s : kColumns) {
      auto it = r.per_subset.find(s);
      if (it == r.per_subset.end()) {
        std::snprintf(cell, sizeof(cell), " %12s", "-");
      } else {
        std::snprintf(cell, sizeof(cell), " %12.1f", 100.0 * it->second);
      }
      out += cell;
    }
    std::snprintf(cell, sizeof(cell), " %12.1f %12.1f\n", 100.0 * r.mmp_f1, 100.0 * r.mean_f1);
    out += cell;
  }
  return out;
}

std::string MetricReportJson(const MetricReport &report) {
  nlohmann::json j;
  j["mean_f1"] = report.mean_f1;
  j["mmp_f1"] = report.mmp_f1;
  j["n_instances"] = report.n_instances;
  j["n_articles"] = report.n_articles;
  j["per_subset"] = nlohmann::json::object();
  for (const auto &[subset, score] : report.per_subset) {
    j["per_subset"][SubsetName(subset)] = {{"mmp_f1", score},
                                           {"articles", report.per_subset_articles.at(subset)}};
  }
  return j.dump(2);
}

MetricReport MetricReportFromJson(const std::string &text) {
  MetricReport report;
  try {
    const auto j = nlohmann::json::parse(text);
    report.mean_f1 = j.at("mean_f1").get<double>();
    report.mmp_f1 = j.at("mmp_f1").get<double>();
    report.n_instances = j.at("n_instances").get<size_t>();
    report.n_articles = j.at("n_articles").get<size_t>();
    for (const auto &[name, entry] : j.at("per_subset").items()) {
      const Subset s = ParseSubset(name);
      report.per_subset[s] = entry.at("mmp_f1").get<double>();
      report.per_subset_articles[s] = entry.at("articles").get<size_t>();
    }
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorCode::kParse, std::string("metric report: ") + e.what());
  }
  return report;
}

}  // namespace mpe
