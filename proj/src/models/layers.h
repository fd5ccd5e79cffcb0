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

// Building blocks shared by the model implementations.

#ifndef MPE_MODELS_LAYERS_H_
#define MPE_MODELS_LAYERS_H_

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "mpe/autograd/ops.h"
#include "mpe/autograd/tensor.h"
#include "mpe/base/random.h"
#include "mpe/models/config.h"

namespace mpe::internal {

template <typename T>
using Tensor = ag::Tensor<T>;

// Creates a registered parameter: name, shape, init stddev, constant fill.
template <typename T>
using ParamFn = std::function<Tensor<T>(const std::string &, ag::Shape, double, double)>;

inline double GlorotStd(int64_t in, int64_t out) {
  return std::sqrt(2.0 / static_cast<double>(in + out));
}

template <typename T>
struct Linear {
  Tensor<T> w, b;

  Linear() = default;
  Linear(const ParamFn<T> &param, const std::string &name, int64_t in, int64_t out)
      : w(param(name + ".weight", {in, out}, GlorotStd(in, out), 0.0)),
        b(param(name + ".bias", {out}, 0.0, 0.0)) {}

  Tensor<T> operator()(const Tensor<T> &x) const { return ag::Add(ag::MatMul(x, w), b); }
};

template <typename T>
struct Norm {
  Tensor<T> gain, bias;

  Norm() = default;
  Norm(const ParamFn<T> &param, const std::string &name, int64_t dim)
      : gain(param(name + ".gain", {dim}, 0.0, 1.0)), bias(param(name + ".bias", {dim}, 0.0, 0.0)) {}

  Tensor<T> operator()(const Tensor<T> &x) const { return ag::LayerNorm(x, gain, bias); }
};

// Dropout that is a no-op without a generator.
template <typename T>
Tensor<T> MaybeDropout(const Tensor<T> &x, double p, bool training, Rng *rng) {
  if (!training || p <= 0.0 || rng == nullptr) return x;
  return ag::Dropout(x, p, *rng, true);
}

template <typename T>
struct Attention {
  Linear<T> q, k, v, o;
  int heads = 1;

  Attention() = default;
  Attention(const ParamFn<T> &param, const std::string &name, int64_t dim, int heads_)
      : q(param, name + ".query", dim, dim),
        k(param, name + ".key", dim, dim),
        v(param, name + ".value", dim, dim),
        o(param, name + ".output", dim, dim),
        heads(heads_) {}

  // [B, L, D] -> [B, H, L, D / H].
  Tensor<T> Split(const Tensor<T> &x) const {
    const int64_t b = x.dim(0), l = x.dim(1), d = x.dim(2);
    return ag::Permute(ag::Reshape(x, {b, l, heads, d / heads}), {0, 2, 1, 3});
  }

  struct KeyValue {
    Tensor<T> keys, values;
  };

  // Head-split key and value projections of a memory [B, S, D], reusable
  // for every query against that memory.
  KeyValue Project(const Tensor<T> &memory) const { return {Split(k(memory)), Split(v(memory))}; }

  // query: [B, Lq, D]; keys: [B, S, D]. key_mask broadcasts to
  // [B, H, Lq, S]; causal is [Lq, S]. Either may be null.
  Tensor<T> operator()(const Tensor<T> &query, const Tensor<T> &keys, const ag::Mask *key_mask,
                       const ag::Mask *causal, double dropout, bool training, Rng *rng) const {
    return Attend(query, Project(keys), key_mask, causal, dropout, training, rng);
  }

  Tensor<T> Attend(const Tensor<T> &query, const KeyValue &kv, const ag::Mask *key_mask,
                   const ag::Mask *causal, double dropout, bool training, Rng *rng) const {
    const int64_t b = query.dim(0), lq = query.dim(1), d = query.dim(2);
    Tensor<T> qh = Split(q(query));
    Tensor<T> scores = ag::Scale(ag::MatMul(qh, kv.keys, true),
                                 static_cast<T>(1.0 / std::sqrt(static_cast<double>(d / heads))));
    if (key_mask) scores = ag::MaskedFill(scores, *key_mask, static_cast<T>(-1e9));
    if (causal) scores = ag::MaskedFill(scores, *causal, static_cast<T>(-1e9));
    Tensor<T> weights = MaybeDropout(ag::Softmax(scores, -1), dropout, training, rng);
    Tensor<T> context = ag::Permute(ag::MatMul(weights, kv.values), {0, 2, 1, 3});
    return o(ag::Reshape(context, {b, lq, d}));
  }
};

template <typename T>
struct FeedForward {
  Linear<T> in, out;
  Activation activation = Activation::kRelu;

  FeedForward() = default;
  FeedForward(const ParamFn<T> &param, const std::string &name, int64_t dim, int64_t hidden,
              Activation act)
      : in(param, name + ".in", dim, hidden), out(param, name + ".out", hidden, dim), activation(act) {}

  Tensor<T> operator()(const Tensor<T> &x, double dropout, bool training, Rng *rng) const {
    Tensor<T> h = in(x);
    h = activation == Activation::kGelu ? ag::Gelu(h) : ag::Relu(h);
    return out(MaybeDropout(h, dropout, training, rng));
  }
};

// Fixed sinusoidal encodings [length, dim].
template <typename T>
Tensor<T> SinusoidTable(int64_t length, int64_t dim) {
  std::vector<T> data(static_cast<size_t>(length * dim));
  for (int64_t pos = 0; pos < length; ++pos) {
    for (int64_t i = 0; i < dim; i += 2) {
      const double angle = pos / std::pow(10000.0, static_cast<double>(i) / dim);
      data[pos * dim + i] = static_cast<T>(std::sin(angle));
      if (i + 1 < dim) data[pos * dim + i + 1] = static_cast<T>(std::cos(angle));
    }
  }
  return Tensor<T>::FromData({length, dim}, std::move(data));
}

// Pads id rows with PAD to the longest row; empty rows are not allowed.
std::vector<int32_t> PadIds(const std::vector<std::vector<int32_t>> &rows, int32_t pad,
                            int64_t *width);

// [B, 1, 1, S] mask marking padded key positions.
ag::Mask KeyPaddingMask(const std::vector<std::vector<int32_t>> &rows, int64_t width);

// [L, L] mask hiding future positions.
ag::Mask CausalMask(int64_t length);

}  // namespace mpe::internal

#endif  // MPE_MODELS_LAYERS_H_
