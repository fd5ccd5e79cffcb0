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

#include "mpe/hpo/sampler.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mpe/base/error.h"

namespace mpe {
namespace {

constexpr double kMinBandwidthFraction = 1e-3;

// Bounds of a numeric parameter in the space the density is modeled in.
struct Interval {
  double low, high;
  double width() const { return high - low; }
};

Interval ModelInterval(const ParamSpec &p) {
  double low = p.low, high = p.high;
  if (p.kind == ParamKind::kInt) {
    low -= 0.5;
    high += 0.5;
    if (p.log) low = std::max(low, p.low * 0.5);
  }
  if (p.log) return {std::log(low), std::log(high)};
  return {low, high};
}

double ToModel(const ParamSpec &p, double x) { return p.log ? std::log(x) : x; }

ParamValue FromModel(const ParamSpec &p, double t) {
  double x = p.log ? std::exp(t) : t;
  x = std::clamp(x, p.low, p.high);
  if (p.kind == ParamKind::kInt) {
    return static_cast<int64_t>(std::clamp(std::round(x), p.low, p.high));
  }
  return x;
}

double NormalCdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Equal-weight mixture of Gaussians truncated to an interval.
class Parzen {
 public:
  Parzen(const std::vector<double> &points, Interval range) : range_(range) {
    const double w = range.width();
    const double bandwidth =
        std::max(w / static_cast<double>(std::max<size_t>(points.size(), 1)), kMinBandwidthFraction * w);
    for (double x : points) Add(x, bandwidth);
    Add(0.5 * (range.low + range.high), w);
  }

  double LogDensity(double x) const {
    double total = 0.0;
    for (const auto &c : components_) {
      const double z = (x - c.mean) / c.sigma;
      total += std::exp(-0.5 * z * z) / (c.sigma * std::sqrt(2.0 * M_PI) * c.mass);
    }
    return std::log(total / static_cast<double>(components_.size()) +
                    std::numeric_limits<double>::min());
  }

  double Sample(Rng &rng) const {
    const auto &c = components_[rng.Uniform(components_.size())];
    for (int attempt = 0; attempt < 100; ++attempt) {
      const double x = c.mean + c.sigma * rng.Normal();
      if (x >= range_.low && x <= range_.high) return x;
    }
    return std::clamp(c.mean, range_.low, range_.high);
  }

 private:
  struct Component {
    double mean, sigma, mass;
  };

  void Add(double mean, double sigma) {
    const double mass = NormalCdf((range_.high - mean) / sigma) - NormalCdf((range_.low - mean) / sigma);
    components_.push_back({mean, sigma, std::max(mass, 1e-300)});
  }

  Interval range_;
  std::vector<Component> components_;
};

const ParamValue &Lookup(const Observation &o, const ParamSpec &p) {
  auto it = o.params.find(p.name);
  if (it == o.params.end()) {
    throw Error(ErrorCode::kInvalidArgument, "history trial lacks parameter '" + p.name + "'");
  }
  return it->second;
}

double NumericValue(const Observation &o, const ParamSpec &p) {
  const ParamValue &v = Lookup(o, p);
  if (p.kind == ParamKind::kInt && std::holds_alternative<int64_t>(v)) {
    return static_cast<double>(std::get<int64_t>(v));
  }
  if (p.kind == ParamKind::kReal && std::holds_alternative<double>(v)) return std::get<double>(v);
  throw Error(ErrorCode::kInvalidArgument, "history value of '" + p.name + "' has the wrong type");
}

size_t ChoiceIndex(const Observation &o, const ParamSpec &p) {
  const ParamValue &v = Lookup(o, p);
  const auto *s = std::get_if<std::string>(&v);
  if (s) {
    auto it = std::find(p.choices.begin(), p.choices.end(), *s);
    if (it != p.choices.end()) return static_cast<size_t>(it - p.choices.begin());
  }
  throw Error(ErrorCode::kInvalidArgument, "history value of '" + p.name + "' is not a choice");
}

ParamValue SuggestNumeric(const ParamSpec &p, const std::vector<const Observation *> &good,
                          const std::vector<const Observation *> &bad, int candidates, Rng &rng) {
  const Interval range = ModelInterval(p);
  if (range.width() <= 0.0) return FromModel(p, range.low);
  std::vector<double> g, b;
  for (const auto *o : good) g.push_back(ToModel(p, NumericValue(*o, p)));
  for (const auto *o : bad) b.push_back(ToModel(p, NumericValue(*o, p)));
  const Parzen l(g, range), gd(b, range);
  double best = 0.0, best_score = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < candidates; ++i) {
    const double x = l.Sample(rng);
    const double score = l.LogDensity(x) - gd.LogDensity(x);
    if (score > best_score) {
      best_score = score;
      best = x;
    }
  }
  return FromModel(p, best);
}

ParamValue SuggestCategorical(const ParamSpec &p, const std::vector<const Observation *> &good,
                              const std::vector<const Observation *> &bad, int candidates,
                              Rng &rng) {
  std::vector<double> l(p.choices.size(), 1.0), g(p.choices.size(), 1.0);
  for (const auto *o : good) l[ChoiceIndex(*o, p)] += 1.0;
  for (const auto *o : bad) g[ChoiceIndex(*o, p)] += 1.0;
  const double lt = std::accumulate(l.begin(), l.end(), 0.0);
  const double gt = std::accumulate(g.begin(), g.end(), 0.0);
  size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < candidates; ++i) {
    const size_t k = rng.Categorical(l);
    const double score = std::log(l[k] / lt) - std::log(g[k] / gt);
    if (score > best_score) {
      best_score = score;
      best = k;
    }
  }
  return p.choices[best];
}

}  // namespace

Assignment SamplePrior(const SearchSpace &space, Rng &rng) {
  Assignment out;
  for (const auto &p : space.params) {
    if (p.kind == ParamKind::kCategorical) {
      out[p.name] = p.choices[rng.Uniform(p.choices.size())];
      continue;
    }
    const Interval range = ModelInterval(p);
    out[p.name] = FromModel(p, rng.UniformReal(range.low, range.high));
  }
  return out;
}

Assignment SuggestTpe(const SearchSpace &space, std::span<const Observation> history,
                      const TpeOptions &options, Rng &rng) {
  if (!(options.gamma > 0.0 && options.gamma < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "gamma must lie in (0, 1)");
  }
  if (options.candidates < 1) throw Error(ErrorCode::kInvalidArgument, "need at least one candidate");
  for (const auto &o : history) {
    for (const auto &[name, _] : o.params) {
      if (!space.Find(name)) {
        throw Error(ErrorCode::kInvalidArgument, "history parameter '" + name + "' is not in the space");
      }
    }
  }
  if (history.size() < static_cast<size_t>(std::max(options.startup_trials, 1))) {
    return SamplePrior(space, rng);
  }
  std::vector<const Observation *> sorted;
  for (const auto &o : history) sorted.push_back(&o);
  const bool maximize = options.direction == Direction::kMaximize;
  std::stable_sort(sorted.begin(), sorted.end(), [&](const Observation *a, const Observation *b) {
    return maximize ? a->value > b->value : a->value < b->value;
  });
  const size_t n_good = std::clamp<size_t>(
      static_cast<size_t>(std::ceil(options.gamma * static_cast<double>(sorted.size()))), 1,
      sorted.size());
  const std::vector<const Observation *> good(sorted.begin(), sorted.begin() + n_good);
  const std::vector<const Observation *> bad(sorted.begin() + n_good, sorted.end());
  Assignment out;
  for (const auto &p : space.params) {
    out[p.name] = p.kind == ParamKind::kCategorical
                      ? SuggestCategorical(p, good, bad, options.candidates, rng)
                      : SuggestNumeric(p, good, bad, options.candidates, rng);
  }
  return out;
}

}  // namespace mpe
