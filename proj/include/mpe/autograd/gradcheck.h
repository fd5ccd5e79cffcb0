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

// Finite-difference gradient checking in double precision.

#ifndef MPE_AUTOGRAD_GRADCHECK_H_
#define MPE_AUTOGRAD_GRADCHECK_H_

#include <cstdint>
#include <functional>
#include <vector>

#include "mpe/autograd/tensor.h"

namespace mpe::ag {

// Max over coordinates of |analytic - numeric| / max(|analytic|, |numeric|,
// 1e-8), with numeric = (f(x + eps e_i) - f(x - eps e_i)) / (2 eps). `f`
// must return a scalar and be deterministic. Throws when eps <= 0.
double GradCheck(const std::function<Tensor<double>(const Tensor<double> &)> &f,
                 const Tensor<double> &x, double eps);

// Same check over several leaf tensors that `loss` reads directly. When
// max_per_tensor > 0 only that many evenly spaced coordinates per tensor are
// probed.
double GradCheck(const std::function<Tensor<double>()> &loss, std::vector<Tensor<double>> params,
                 double eps, int64_t max_per_tensor = 0);

}  // namespace mpe::ag

#endif  // MPE_AUTOGRAD_GRADCHECK_H_
