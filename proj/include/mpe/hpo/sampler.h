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

// Tree-structured Parzen Estimator over a SearchSpace.
//
// Until `startup_trials` trials have completed, values are drawn from the
// prior (uniform, or log-uniform for log ranges). Afterwards each parameter
// is handled independently: completed trials are split into the best
// ceil(gamma * n) ("good") and the rest ("bad"); a density l is fitted to
// the good values and g to the bad ones, `candidates` values are drawn from
// l and the one maximizing l(x) / g(x) is kept.
//
// Numeric densities are mixtures of Gaussians truncated to the range, one
// per observation with bandwidth range / max(count, 1) floored at 1e-3 of
// the range, plus a prior component at the range midpoint with the full
// range as bandwidth. Log ranges are modeled in log space; integers on
// [low - 0.5, high + 0.5] and rounded. Categorical densities are choice
// counts plus one, normalized.

#ifndef MPE_HPO_SAMPLER_H_
#define MPE_HPO_SAMPLER_H_

#include <optional>
#include <span>
#include <vector>

#include "mpe/base/random.h"
#include "mpe/hpo/space.h"

namespace mpe {

enum class Direction { kMaximize, kMinimize };

struct TpeOptions {
  double gamma = 0.15;
  int candidates = 24;
  int startup_trials = 5;
  Direction direction = Direction::kMaximize;
};

// One finished evaluation used as sampler history.
struct Observation {
  Assignment params;
  double value = 0.0;
};

Assignment SamplePrior(const SearchSpace &space, Rng &rng);

// Throws kInvalidArgument when an observation does not fit the space.
Assignment SuggestTpe(const SearchSpace &space, std::span<const Observation> history,
                      const TpeOptions &options, Rng &rng);

}  // namespace mpe

#endif  // MPE_HPO_SAMPLER_H_
