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

// Sequential studies with a percentile pruner, and the study log.
//
// Study log: one JSON object per trial, written as the trial ends:
//   {"trial": 3, "status": "pruned", "params": {...}, "value": null,
//    "pruned_step": 400, "intermediate": [[200, 0.41], [400, 0.43]]}

#ifndef MPE_HPO_STUDY_H_
#define MPE_HPO_STUDY_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mpe/hpo/sampler.h"
#include "mpe/hpo/space.h"

namespace mpe {

enum class TrialStatus { kRunning, kCompleted, kPruned, kFailed };

const char *TrialStatusName(TrialStatus status);

struct Trial {
  int64_t id = 0;
  Assignment params;
  // Best value reported so far, keyed by step.
  std::map<int64_t, double> intermediate;
  TrialStatus status = TrialStatus::kRunning;
  // Set iff completed.
  std::optional<double> value;
  std::optional<int64_t> pruned_step;
  std::string error;
};

struct StudyConfig {
  int n_trials = 250;
  double gamma = 0.15;
  int n_candidates = 24;
  int startup_trials = 5;
  double pruner_keep_fraction = 0.10;
  int pruner_warmup_trials = 5;
  Direction direction = Direction::kMaximize;
  uint64_t seed = 1;

  void Validate() const;
};

// Percentile rule. False while fewer than pruner_warmup_trials trials have
// completed, or when fewer than two trials (the candidate included) have a
// value at `step`. Otherwise true iff the candidate's best-so-far value at
// `step` is strictly worse than the (1 - keep_fraction) quantile, linearly
// interpolated, of all trials' values at that step. Throws kNotFound when
// the candidate has no value at `step`.
bool ShouldPrune(const Trial &candidate, int64_t step, std::span<const Trial> trials,
                 const StudyConfig &config);

// Handed to the objective for intermediate results.
class TrialReporter {
 public:
  TrialReporter(Trial &trial, std::span<const Trial> finished, const StudyConfig &config)
      : trial_(trial), finished_(finished), config_(config) {}

  // Records max/min-so-far at `step` (steps must increase) and returns true
  // when the trial should stop; the study then marks it pruned.
  bool Report(int64_t step, double value);
  bool pruned() const { return trial_.pruned_step.has_value(); }

 private:
  Trial &trial_;
  std::span<const Trial> finished_;
  const StudyConfig &config_;
};

// Returns the final objective value. Exceptions mark the trial failed.
using Objective = std::function<double(const Assignment &, TrialReporter &)>;

struct StudyResult {
  std::vector<Trial> trials;
  // Index into trials of the best completed trial.
  std::optional<size_t> best;
};

// Runs config.n_trials trials in order: suggest, evaluate with pruning,
// record. Appends each finished trial to `log_path` when given.
StudyResult RunStudy(const Objective &objective, const SearchSpace &space,
                     const StudyConfig &config,
                     const std::optional<std::filesystem::path> &log_path = std::nullopt);

std::string TrialJson(const Trial &trial);

}  // namespace mpe

#endif  // MPE_HPO_STUDY_H_
