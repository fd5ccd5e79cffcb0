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

#include "mpe/autograd/optim.h"

#include <algorithm>
#include <cmath>

#include "mpe/base/error.h"

namespace mpe::ag {

const char *ScheduleName(Schedule schedule) {
  switch (schedule) {
    case Schedule::kConstant:
      return "constant";
    case Schedule::kInverseSqrt:
      return "inverse_sqrt";
    case Schedule::kLinear:
      return "linear";
  }
  return "constant";
}

Schedule ParseSchedule(const std::string &name) {
  if (name == "constant") return Schedule::kConstant;
  if (name == "inverse_sqrt") return Schedule::kInverseSqrt;
  if (name == "linear") return Schedule::kLinear;
  throw Error(ErrorCode::kInvalidArgument, "unknown schedule '" + name + "'");
}

void OptimizerConfig::Validate() const {
  auto fail = [](const std::string &msg) { throw Error(ErrorCode::kInvalidArgument, msg); };
  if (!(learning_rate >= 0.0)) fail("learning rate must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    fail("betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) fail("epsilon must be positive");
  if (!(weight_decay >= 0.0)) fail("weight decay must be non-negative");
  if (warmup_steps < 0) fail("warmup steps must be non-negative");
  if (!(clip_norm >= 0.0)) fail("clip norm must be non-negative");
  if (schedule == Schedule::kLinear && total_steps <= warmup_steps) {
    fail("linear schedule needs total_steps > warmup_steps");
  }
}

double ScheduledLearningRate(const OptimizerConfig &config, int64_t step) {
  const double lr = config.learning_rate;
  const double s = static_cast<double>(std::max<int64_t>(step, 1));
  const double w = static_cast<double>(config.warmup_steps);
  if (config.schedule != Schedule::kConstant && config.warmup_steps > 0 && s < w) {
    return lr * s / w;
  }
  switch (config.schedule) {
    case Schedule::kConstant:
      return lr;
    case Schedule::kInverseSqrt:
      return lr * std::sqrt(std::max(w, 1.0) / s);
    case Schedule::kLinear: {
      const double total = static_cast<double>(config.total_steps);
      return lr * std::max(0.0, (total - s) / (total - w));
    }
  }
  return lr;
}

template <typename T>
AdamW<T>::AdamW(std::vector<NamedParameter<T>> params, OptimizerConfig config)
    : params_(std::move(params)), config_(config) {
  config_.Validate();
  for (const auto &p : params_) {
    m_.emplace_back(p.tensor.values().size(), T(0));
    v_.emplace_back(p.tensor.values().size(), T(0));
  }
}

template <typename T>
void AdamW<T>::Step() {
  double norm2 = 0.0;
  for (const auto &p : params_) {
    if (!p.tensor.has_grad()) continue;
    for (T g : p.tensor.grad()) {
      if (!std::isfinite(g)) {
        throw Error(ErrorCode::kNumeric, "non-finite gradient in parameter '" + p.name + "'");
      }
      norm2 += static_cast<double>(g) * g;
    }
  }
  double clip = 1.0;
  if (config_.clip_norm > 0.0) {
    const double norm = std::sqrt(norm2);
    if (norm > config_.clip_norm) clip = config_.clip_norm / norm;
  }
  ++step_;
  const double lr = ScheduledLearningRate(config_, step_);
  last_lr_ = lr;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  const T b1 = static_cast<T>(config_.beta1), b2 = static_cast<T>(config_.beta2);
  for (size_t i = 0; i < params_.size(); ++i) {
    Tensor<T> &t = params_[i].tensor;
    const bool has = t.has_grad();
    T *x = t.data();
    std::vector<T> &m = m_[i];
    std::vector<T> &v = v_[i];
    const T *g = has ? t.grad().data() : nullptr;
    for (size_t j = 0; j < m.size(); ++j) {
      const T gj = g ? static_cast<T>(g[j] * clip) : T(0);
      m[j] = b1 * m[j] + (T(1) - b1) * gj;
      v[j] = b2 * v[j] + (T(1) - b2) * gj * gj;
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      const double update = mhat / (std::sqrt(vhat) + config_.epsilon) +
                            config_.weight_decay * static_cast<double>(x[j]);
      x[j] = static_cast<T>(x[j] - lr * update);
    }
  }
}

template <typename T>
void AdamW<T>::ZeroGrad() {
  for (auto &p : params_) p.tensor.ZeroGrad();
}

template <typename T>
void AdamW<T>::LoadState(int64_t step, std::vector<std::vector<T>> m,
                         std::vector<std::vector<T>> v) {
  if (step < 0 || m.size() != params_.size() || v.size() != params_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "optimizer state does not match the parameters");
  }
  for (size_t i = 0; i < params_.size(); ++i) {
    if (m[i].size() != m_[i].size() || v[i].size() != v_[i].size()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "optimizer state size mismatch for '" + params_[i].name + "'");
    }
  }
  step_ = step;
  m_ = std::move(m);
  v_ = std::move(v);
}

template class AdamW<float>;
template class AdamW<double>;

}  // namespace mpe::ag
