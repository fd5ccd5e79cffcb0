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

// Adaptive-moment optimizer with decoupled weight decay and learning-rate
// schedules.

#ifndef MPE_AUTOGRAD_OPTIM_H_
#define MPE_AUTOGRAD_OPTIM_H_

#include <cstdint>
#include <string>
#include <vector>

#include "mpe/autograd/tensor.h"

namespace mpe::ag {

enum class Schedule { kConstant, kInverseSqrt, kLinear };

const char *ScheduleName(Schedule schedule);
// Accepts "constant", "inverse_sqrt" and "linear".
Schedule ParseSchedule(const std::string &name);

struct OptimizerConfig {
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
  Schedule schedule = Schedule::kConstant;
  int64_t warmup_steps = 0;
  // Needed by kLinear, which reaches zero here.
  int64_t total_steps = 0;
  // Global gradient-norm clip; 0 disables.
  double clip_norm = 0.0;

  void Validate() const;
};

// Learning rate for 1-based update `step`.
//   kInverseSqrt: linear warmup, then lr * sqrt(warmup / step).
//   kLinear: linear warmup, then linear decay to 0 at total_steps.
double ScheduledLearningRate(const OptimizerConfig &config, int64_t step);

template <typename T>
struct NamedParameter {
  std::string name;
  Tensor<T> tensor;
};

template <typename T>
class AdamW {
 public:
  AdamW(std::vector<NamedParameter<T>> params, OptimizerConfig config);

  // One update from the current gradients. A parameter without a gradient
  // counts as zero gradient. Throws kNumeric on a non-finite gradient,
  // leaving parameters untouched.
  void Step();
  void ZeroGrad();

  int64_t step() const { return step_; }
  // Rate used by the most recent Step().
  double last_learning_rate() const { return last_lr_; }
  const std::vector<NamedParameter<T>> &parameters() const { return params_; }
  const OptimizerConfig &config() const { return config_; }

  const std::vector<std::vector<T>> &first_moments() const { return m_; }
  const std::vector<std::vector<T>> &second_moments() const { return v_; }
  // Restores state saved from an optimizer over identically shaped
  // parameters.
  void LoadState(int64_t step, std::vector<std::vector<T>> m, std::vector<std::vector<T>> v);

 private:
  std::vector<NamedParameter<T>> params_;
  OptimizerConfig config_;
  std::vector<std::vector<T>> m_, v_;
  int64_t step_ = 0;
  double last_lr_ = 0.0;
};

}  // namespace mpe::ag

#endif  // MPE_AUTOGRAD_OPTIM_H_
