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

// Set-based F1 over (property, value) pairs: Mean-F1 per property instance
// and Mean-MultiProperty-F1 (MMP-F1) per article.

#ifndef MPE_METRICS_METRICS_H_
#define MPE_METRICS_METRICS_H_

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mpe/base/text.h"
#include "mpe/corpus/record.h"
#include "mpe/diagnostics/diagnostics.h"

namespace mpe {

using AnswerSet = std::set<PropertyValuePair>;

// Canonicalizes under `policy`; pairs with an empty field are skipped.
AnswerSet MakeAnswerSet(const std::vector<PropertyValuePair> &pairs,
                        const NormalizationPolicy &policy = {});

struct PrfScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// P = |E∩O|/|O|, R = |E∩O|/|E|. Empty O gives P = 0; empty E and O give
// F1 = 1; P + R = 0 gives F1 = 0.
PrfScore PairF1(const AnswerSet &expected, const AnswerSet &predicted);

struct ScoredSets {
  AnswerSet expected;
  AnswerSet predicted;
};

// Mean of per-item F1 with items being property instances. Throws on empty.
double MeanF1(std::span<const ScoredSets> instances);

// Same mean with items being whole articles.
double MmpF1(std::span<const ScoredSets> articles);

struct MetricReport {
  double mean_f1 = 0.0;
  double mmp_f1 = 0.0;
  // Only subsets with at least one instance in the split.
  std::map<Subset, double> per_subset;
  std::map<Subset, size_t> per_subset_articles;
  size_t n_instances = 0;
  size_t n_articles = 0;
};

using PredictionMap = std::map<std::string, std::vector<PropertyValuePair>>;

PredictionMap PredictionsFromRecords(const Corpus &predictions);

// Predictions file: record-stream lines with "article_id" and "pairs";
// "text" is optional and an empty pairs list means no answer.
PredictionMap LoadPredictions(const std::filesystem::path &path,
                              const NormalizationPolicy &policy = {});

// Overall MMP-F1 and Mean-F1, plus per-subset MMP-F1 pooling only the
// flagged instances of each article. Predicted pairs whose property is not
// an instance of the article count against precision in MMP-F1 and are
// ignored by the property-centric Mean-F1. Throws when an article of
// `split` has no prediction entry.
MetricReport BuildReport(const Corpus &split, const PredictionMap &predictions,
                         const DiagnosticLabels &labels, const NormalizationPolicy &policy = {});

// Table columns: unseen, rare, categorical, relational, exact match, long,
// overall MMP-F1, Mean-F1. Scores x100 with one decimal; "-" for subsets
// with no instance.
std::string FormatMetricTable(const std::vector<std::pair<std::string, MetricReport>> &rows);
std::string MetricReportJson(const MetricReport &report);
MetricReport MetricReportFromJson(const std::string &json);

}  // namespace mpe

#endif  // MPE_METRICS_METRICS_H_
