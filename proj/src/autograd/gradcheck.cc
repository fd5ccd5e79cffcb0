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

#include "mpe/autograd/gradcheck.h"

#include <algorithm>
#include <cmath>

#include "mpe/base/error.h"

namespace mpe::ag {

double GradCheck(const std::function<Tensor<double>()> &loss, std::vector<Tensor<double>> params,
                 double eps, int64_t max_per_tensor) {
  if (!(eps > 0.0)) throw Error(ErrorCode::kInvalidArgument, "grad check needs eps > 0");
  for (auto &p : params) {
    p.set_requires_grad(true);
    p.ZeroGrad();
  }
  Tensor<double> out = loss();
  Backward(out);
  std::vector<std::vector<double>> analytic;
  for (auto &p : params) analytic.push_back(p.grad());

  NoGradGuard no_grad;
  double worst = 0.0;
  for (size_t t = 0; t < params.size(); ++t) {
    std::vector<double> &x = params[t].values();
    const int64_t n = static_cast<int64_t>(x.size());
    const int64_t probes = max_per_tensor > 0 ? std::min(n, max_per_tensor) : n;
    for (int64_t k = 0; k < probes; ++k) {
      const int64_t i = probes == n ? k : k * n / probes;
      const double saved = x[i];
      x[i] = saved + eps;
      const double up = loss().item();
      x[i] = saved - eps;
      const double down = loss().item();
      x[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[t][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  for (auto &p : params) p.ZeroGrad();
  return worst;
}

double GradCheck(const std::function<Tensor<double>(const Tensor<double> &)> &f,
                 const Tensor<double> &x, double eps) {
  return GradCheck([&] { return f(x); }, {x}, eps);
}

}  // namespace mpe::ag
