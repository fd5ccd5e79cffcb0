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

#ifndef MPE_BASE_RANDOM_H_
#define MPE_BASE_RANDOM_H_

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace mpe {

// Seeded generator with platform-independent derived distributions.
// std::mt19937_64 is fully specified by the standard, but the standard
// distributions are not, so everything downstream of the raw engine output
// is implemented here.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t Next() { return engine_(); }

  // Uniform integer in [0, n). n must be positive.
  uint64_t Uniform(uint64_t n);

  // Uniform integer in [lo, hi].
  int64_t UniformInt(int64_t lo, int64_t hi);

  // Uniform real in [0, 1) with 53 random bits.
  double UniformReal();

  double UniformReal(double lo, double hi) {
    return lo + (hi - lo) * UniformReal();
  }

  // Standard normal via Box-Muller.
  double Normal();

  bool Bernoulli(double p) { return UniformReal() < p; }

  // Knuth's multiplication method; fine for the small rates used here.
  int Poisson(double lambda);

  // Index drawn proportionally to non-negative weights.
  size_t Categorical(std::span<const double> weights);

  // Fisher-Yates.
  template <typename It>
  void Shuffle(It first, It last) {
    const auto n = last - first;
    for (auto i = n - 1; i > 0; --i) {
      const auto j = static_cast<decltype(i)>(Uniform(i + 1));
      using std::swap;
      swap(first[i], first[j]);
    }
  }

  // Derives an independent stream, e.g. one per trial or per worker.
  Rng Fork() { return Rng(Next() ^ 0x9e3779b97f4a7c15ULL); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mpe

#endif  // MPE_BASE_RANDOM_H_
