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

// Differentiable tensor operations.
//
// Broadcasting follows the usual trailing-axis rule: shapes are aligned at
// their last axis, and each pair of sizes must be equal or contain a 1 (a
// missing leading axis counts as 1). Shape errors name the op and both
// shapes.

#ifndef MPE_AUTOGRAD_OPS_H_
#define MPE_AUTOGRAD_OPS_H_

#include <cstdint>
#include <vector>

#include "mpe/autograd/tensor.h"
#include "mpe/base/random.h"

namespace mpe::ag {

Shape BroadcastShapes(const Shape &a, const Shape &b, const char *op);

template <typename T> Tensor<T> Add(const Tensor<T> &a, const Tensor<T> &b);
template <typename T> Tensor<T> Sub(const Tensor<T> &a, const Tensor<T> &b);
template <typename T> Tensor<T> Mul(const Tensor<T> &a, const Tensor<T> &b);
template <typename T> Tensor<T> Scale(const Tensor<T> &a, T factor);

// a: [..., M, K]. b: [K, N] (shared across the leading axes) or
// [..., K, N] with the same leading axes as a. With transpose_b, b holds
// [..., N, K].
template <typename T>
Tensor<T> MatMul(const Tensor<T> &a, const Tensor<T> &b, bool transpose_b = false);

// Sum or mean of all elements, as a scalar.
template <typename T> Tensor<T> Sum(const Tensor<T> &a);
template <typename T> Tensor<T> Mean(const Tensor<T> &a);

template <typename T> Tensor<T> Relu(const Tensor<T> &a);
// Exact form x * Phi(x).
template <typename T> Tensor<T> Gelu(const Tensor<T> &a);
template <typename T> Tensor<T> Tanh(const Tensor<T> &a);
template <typename T> Tensor<T> Sigmoid(const Tensor<T> &a);

// Max-subtracted softmax along `axis`.
template <typename T> Tensor<T> Softmax(const Tensor<T> &a, int axis);

// Normalizes the last axis, then applies gain and bias of that size.
template <typename T>
Tensor<T> LayerNorm(const Tensor<T> &x, const Tensor<T> &gain, const Tensor<T> &bias,
                    double epsilon = 1e-5);

// Rows of `weight` ([V, D]) selected by `ids`; the result has shape
// ids_shape + [D]. Throws on an id outside [0, V).
template <typename T>
Tensor<T> Embedding(const Tensor<T> &weight, const std::vector<int32_t> &ids,
                    const Shape &ids_shape);

template <typename T> Tensor<T> Concat(const std::vector<Tensor<T>> &parts, int axis);
template <typename T> Tensor<T> Slice(const Tensor<T> &a, int axis, int64_t start, int64_t length);
template <typename T> Tensor<T> Permute(const Tensor<T> &a, const std::vector<int> &perm);
template <typename T> Tensor<T> Transpose(const Tensor<T> &a, int axis0, int axis1);
// One axis may be -1 and is inferred.
template <typename T> Tensor<T> Reshape(const Tensor<T> &a, Shape shape);

// Byte mask broadcastable to a target shape; nonzero marks positions.
struct Mask {
  Shape shape;
  std::vector<uint8_t> data;
};

// Replaces masked positions with `value`; those positions get no gradient.
template <typename T> Tensor<T> MaskedFill(const Tensor<T> &a, const Mask &mask, T value);

// Inverted dropout: kept entries are scaled by 1 / (1 - p). Identity when
// training is false or p is 0.
template <typename T> Tensor<T> Dropout(const Tensor<T> &a, double p, Rng &rng, bool training);

// Mean negative log-likelihood over rows whose target is not ignore_index.
// logits: [N, V]; targets: N ids. Zero when every row is ignored.
template <typename T>
Tensor<T> CrossEntropy(const Tensor<T> &logits, const std::vector<int32_t> &targets,
                       int32_t ignore_index = -1);

}  // namespace mpe::ag

#endif  // MPE_AUTOGRAD_OPS_H_
