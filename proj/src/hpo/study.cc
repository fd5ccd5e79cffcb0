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

#include "mpe/hpo/study.h"

#include <json.hpp>
#include <algorithm>
#include <cmath>
#include <fstream>

#include "mpe/base/error.h"

namespace mpe {
namespace {

using nlohmann::json;

bool Better(double a, double b, Direction d) { return d == Direction::kMaximize ? a > b : a < b; }

}  // namespace

const char *TrialStatusName(TrialStatus status) {
  switch (status) {
    case TrialStatus::kRunning:
      return "running";
    case TrialStatus::kCompleted:
      return "completed";
    case TrialStatus::kPruned:
      return "pruned";
    case TrialStatus::kFailed:
      return "failed";
  }
  return "failed";
}

void StudyConfig::Validate() const {
  auto fail = [](const std::string &msg) { throw Error(ErrorCode::kInvalidArgument, msg); };
  if (n_trials < 1) fail("n_trials must be at least 1");
  if (!(gamma > 0.0 && gamma < 1.0)) fail("gamma must lie in (0, 1)");
  if (n_candidates < 1) fail("n_candidates must be at least 1");
  if (startup_trials < 0) fail("startup_trials must be non-negative");
  if (!(pruner_keep_fraction > 0.0 && pruner_keep_fraction <= 1.0)) {
    fail("pruner keep fraction must lie in (0, 1]");
  }
  if (pruner_warmup_trials < 0) fail("pruner warmup must be non-negative");
}

bool ShouldPrune(const Trial &candidate, int64_t step, std::span<const Trial> trials,
                 const StudyConfig &config) {
  auto own = candidate.intermediate.find(step);
  if (own == candidate.intermediate.end()) {
    throw Error(ErrorCode::kNotFound, "trial " + std::to_string(candidate.id) +
                                          " reported nothing at step " + std::to_string(step));
  }
  const auto completed = std::count_if(trials.begin(), trials.end(), [&](const Trial &t) {
    return t.id != candidate.id && t.status == TrialStatus::kCompleted;
  });
  if (completed < config.pruner_warmup_trials) return false;
  const double sign = config.direction == Direction::kMaximize ? 1.0 : -1.0;
  std::vector<double> values = {sign * own->second};
  for (const auto &t : trials) {
    if (t.id == candidate.id) continue;
    auto it = t.intermediate.find(step);
    if (it != t.intermediate.end()) values.push_back(sign * it->second);
  }
  if (values.size() < 2) return false;
  std::sort(values.begin(), values.end());
  const double pos = (1.0 - config.pruner_keep_fraction) * static_cast<double>(values.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, values.size() - 1);
  const double quantile = values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  return sign * own->second < quantile;
}

bool TrialReporter::Report(int64_t step, double value) {
  if (!trial_.intermediate.empty() && step <= trial_.intermediate.rbegin()->first) {
    throw Error(ErrorCode::kInvalidArgument, "intermediate steps must increase");
  }
  double best = value;
  if (!trial_.intermediate.empty()) {
    const double previous = trial_.intermediate.rbegin()->second;
    if (!Better(value, previous, config_.direction)) best = previous;
  }
  trial_.intermediate[step] = best;
  if (ShouldPrune(trial_, step, finished_, config_)) {
    trial_.pruned_step = step;
    return true;
  }
  return false;
}

std::string TrialJson(const Trial &trial) {
  json steps = json::array();
  for (const auto &[step, v] : trial.intermediate) steps.push_back({step, v});
  json j = {{"trial", trial.id},
            {"status", TrialStatusName(trial.status)},
            {"params", json::parse(AssignmentJson(trial.params))},
            {"value", trial.value ? json(*trial.value) : json(nullptr)},
            {"pruned_step", trial.pruned_step ? json(*trial.pruned_step) : json(nullptr)},
            {"intermediate", steps}};
  if (!trial.error.empty()) j["error"] = trial.error;
  return j.dump();
}

StudyResult RunStudy(const Objective &objective, const SearchSpace &space,
                     const StudyConfig &config,
                     const std::optional<std::filesystem::path> &log_path) {
  config.Validate();
  space.Validate();
  std::ofstream log;
  if (log_path) {
    log.open(*log_path, std::ios::trunc);
    if (!log) throw Error(ErrorCode::kIo, "cannot write study log " + log_path->string());
  }
  const TpeOptions tpe{config.gamma, config.n_candidates, config.startup_trials, config.direction};
  Rng rng(config.seed);
  StudyResult result;
  std::vector<Observation> history;
  for (int i = 0; i < config.n_trials; ++i) {
    Rng trial_rng = rng.Fork();
    Trial trial;
    trial.id = i;
    trial.params = SuggestTpe(space, history, tpe, trial_rng);
    TrialReporter reporter(trial, result.trials, config);
    try {
      const double value = objective(trial.params, reporter);
      if (reporter.pruned()) {
        trial.status = TrialStatus::kPruned;
      } else if (!std::isfinite(value)) {
        trial.status = TrialStatus::kFailed;
        trial.error = "objective returned a non-finite value";
      } else {
        trial.status = TrialStatus::kCompleted;
        trial.value = value;
        history.push_back({trial.params, value});
      }
    } catch (const std::exception &e) {
      trial.status = TrialStatus::kFailed;
      trial.error = e.what();
    }
    if (log) log << TrialJson(trial) << '\n' << std::flush;
    result.trials.push_back(std::move(trial));
  }
  for (size_t i = 0; i < result.trials.size(); ++i) {
    const Trial &t = result.trials[i];
    if (t.status != TrialStatus::kCompleted) continue;
    if (!result.best || Better(*t.value, *result.trials[*result.best].value, config.direction)) {
      result.best = i;
    }
  }
  return result;
}

}  // namespace mpe
