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

#include "mpe/autograd/ops.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mpe/base/error.h"

namespace mpe::ag {
namespace {

template <typename T>
using NodePtr = std::shared_ptr<Node<T>>;

template <typename T>
Tensor<T> Record(Shape shape, std::vector<T> data, std::vector<NodePtr<T>> parents,
                 const char *op, std::function<void(Node<T> &)> backward) {
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->op = op;
  if (GradEnabled()) {
    for (const auto &p : parents) {
      if (p->requires_grad) {
        node->requires_grad = true;
        break;
      }
    }
  }
  if (node->requires_grad) {
    node->parents = std::move(parents);
    node->backward = std::move(backward);
  }
  return Tensor<T>(std::move(node));
}

[[noreturn]] void ShapeError(const char *op, const std::string &detail) {
  throw Error(ErrorCode::kInvalidArgument, std::string(op) + ": " + detail);
}

int NormalizeAxis(int axis, int rank, const char *op) {
  const int a = axis < 0 ? axis + rank : axis;
  if (a < 0 || a >= rank) {
    ShapeError(op, "axis " + std::to_string(axis) + " out of range for rank " + std::to_string(rank));
  }
  return a;
}

// Maps output positions to input positions under broadcasting.
struct Broadcast {
  enum Kind { kSame, kScalar, kSuffix, kGeneral } kind = kSame;
  int64_t n = 1;
  std::vector<int64_t> map;

  int64_t operator()(int64_t i) const {
    switch (kind) {
      case kSame:
        return i;
      case kScalar:
        return 0;
      case kSuffix:
        return i % n;
      case kGeneral:
        return map[i];
    }
    return i;
  }
};

Broadcast MakeBroadcast(const Shape &out, const Shape &in) {
  Broadcast b;
  b.n = NumElements(in);
  if (in == out) return b;
  if (b.n == 1) {
    b.kind = Broadcast::kScalar;
    return b;
  }
  size_t first = 0;
  while (first < in.size() && in[first] == 1) ++first;
  const size_t suffix = in.size() - first;
  if (suffix <= out.size() &&
      std::equal(in.begin() + first, in.end(), out.end() - static_cast<ptrdiff_t>(suffix))) {
    b.kind = Broadcast::kSuffix;
    return b;
  }
  b.kind = Broadcast::kGeneral;
  const size_t r = out.size();
  std::vector<int64_t> stride(r, 0);
  int64_t s = 1;
  for (size_t k = 0; k < in.size(); ++k) {
    const size_t i = in.size() - 1 - k;
    const size_t o = r - 1 - k;
    stride[o] = in[i] == 1 ? 0 : s;
    s *= in[i];
  }
  const int64_t total = NumElements(out);
  b.map.resize(static_cast<size_t>(total));
  std::vector<int64_t> counter(r, 0);
  int64_t index = 0;
  for (int64_t i = 0; i < total; ++i) {
    b.map[i] = index;
    for (size_t k = r; k-- > 0;) {
      ++counter[k];
      index += stride[k];
      if (counter[k] < out[k]) break;
      index -= stride[k] * out[k];
      counter[k] = 0;
    }
  }
  return b;
}

// Calls f(i, j) for every output position i of `shape`, where j is the
// input position reached through `stride` (zero strides repeat).
template <typename F>
void StridedVisit(const Shape &shape, const std::vector<int64_t> &stride, F f) {
  const int64_t total = NumElements(shape);
  if (total == 0) return;
  const size_t r = shape.size();
  if (r == 0) {
    f(0, 0);
    return;
  }
  const int64_t inner = shape[r - 1];
  const int64_t step = stride[r - 1];
  std::vector<int64_t> counter(r, 0);
  int64_t index = 0;
  for (int64_t i = 0; i < total; i += inner) {
    for (int64_t k = 0; k < inner; ++k) f(i + k, index + k * step);
    for (size_t k = r - 1; k-- > 0;) {
      ++counter[k];
      index += stride[k];
      if (counter[k] < shape[k]) break;
      index -= stride[k] * shape[k];
      counter[k] = 0;
    }
  }
}

// Strides that read `in` broadcast to `out`.
std::vector<int64_t> BroadcastStrides(const Shape &out, const Shape &in) {
  const size_t r = out.size();
  std::vector<int64_t> stride(r, 0);
  int64_t s = 1;
  for (size_t k = 0; k < in.size(); ++k) {
    const size_t i = in.size() - 1 - k;
    stride[r - 1 - k] = in[i] == 1 ? 0 : s;
    s *= in[i];
  }
  return stride;
}

std::vector<uint8_t> ExpandMask(const Shape &out, const Mask &mask) {
  if (mask.shape == out) return mask.data;
  std::vector<uint8_t> bits(static_cast<size_t>(NumElements(out)));
  StridedVisit(out, BroadcastStrides(out, mask.shape),
               [&](int64_t i, int64_t j) { bits[i] = mask.data[j]; });
  return bits;
}

// Calls f(i, ja, jb) for every output position i with the matching input
// positions, using plain loops for the common broadcast patterns.
template <typename F>
void ForEachPair(const Broadcast &a, const Broadcast &b, int64_t n, F f) {
  using K = Broadcast::Kind;
  if (a.kind == K::kSame && b.kind == K::kSame) {
    for (int64_t i = 0; i < n; ++i) f(i, i, i);
  } else if (a.kind == K::kSame && b.kind == K::kScalar) {
    for (int64_t i = 0; i < n; ++i) f(i, i, 0);
  } else if (a.kind == K::kScalar && b.kind == K::kSame) {
    for (int64_t i = 0; i < n; ++i) f(i, 0, i);
  } else if (a.kind == K::kSame && b.kind == K::kSuffix) {
    for (int64_t r = 0; r < n; r += b.n) {
      for (int64_t j = 0; j < b.n; ++j) f(r + j, r + j, j);
    }
  } else if (a.kind == K::kSuffix && b.kind == K::kSame) {
    for (int64_t r = 0; r < n; r += a.n) {
      for (int64_t j = 0; j < a.n; ++j) f(r + j, j, r + j);
    }
  } else {
    for (int64_t i = 0; i < n; ++i) f(i, a(i), b(i));
  }
}

template <typename T, typename Fwd, typename Bwd>
Tensor<T> Binary(const Tensor<T> &a, const Tensor<T> &b, const char *op, Fwd fwd, Bwd bwd) {
  Shape out = BroadcastShapes(a.shape(), b.shape(), op);
  auto ia = std::make_shared<Broadcast>(MakeBroadcast(out, a.shape()));
  auto ib = std::make_shared<Broadcast>(MakeBroadcast(out, b.shape()));
  const int64_t n = NumElements(out);
  std::vector<T> data(static_cast<size_t>(n));
  const T *pa = a.data();
  const T *pb = b.data();
  T *pd = data.data();
  ForEachPair(*ia, *ib, n, [&](int64_t i, int64_t ja, int64_t jb) { pd[i] = fwd(pa[ja], pb[jb]); });
  return Record<T>(std::move(out), std::move(data), {a.ptr(), b.ptr()}, op,
                   [ia, ib, n, bwd](Node<T> &self) {
                     Node<T> &na = *self.parents[0];
                     Node<T> &nb = *self.parents[1];
                     T *ga = na.requires_grad ? na.Grad().data() : nullptr;
                     T *gb = nb.requires_grad ? nb.Grad().data() : nullptr;
                     const T *g = self.grad.data();
                     const T *xa = na.data.data();
                     const T *xb = nb.data.data();
                     ForEachPair(*ia, *ib, n, [&](int64_t i, int64_t ja, int64_t jb) {
                       bwd(g[i], xa[ja], xb[jb], ga ? &ga[ja] : nullptr, gb ? &gb[jb] : nullptr);
                     });
                   });
}

template <typename T, typename Fwd, typename Deriv>
Tensor<T> Unary(const Tensor<T> &a, const char *op, Fwd fwd, Deriv deriv) {
  std::vector<T> data(a.values().size());
  const T *pa = a.data();
  for (size_t i = 0; i < data.size(); ++i) data[i] = fwd(pa[i]);
  return Record<T>(a.shape(), std::move(data), {a.ptr()}, op, [deriv](Node<T> &self) {
    Node<T> &na = *self.parents[0];
    T *ga = na.Grad().data();
    for (size_t i = 0; i < self.data.size(); ++i) {
      ga[i] += self.grad[i] * deriv(na.data[i], self.data[i]);
    }
  });
}

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using CMap = Eigen::Map<const RowMat<T>>;
template <typename T>
using MMap = Eigen::Map<RowMat<T>>;

// Computes out (+)= A * op(B) for row-major blocks.
template <typename T>
void Gemm(const T *a, const T *b, T *out, int64_t m, int64_t k, int64_t n, bool transpose_b,
          bool accumulate) {
  CMap<T> A(a, m, k);
  MMap<T> C(out, m, n);
  if (transpose_b) {
    CMap<T> B(b, n, k);
    if (accumulate) {
      C.noalias() += A * B.transpose();
    } else {
      C.noalias() = A * B.transpose();
    }
  } else {
    CMap<T> B(b, k, n);
    if (accumulate) {
      C.noalias() += A * B;
    } else {
      C.noalias() = A * B;
    }
  }
}

}  // namespace

Shape BroadcastShapes(const Shape &a, const Shape &b, const char *op) {
  const size_t r = std::max(a.size(), b.size());
  Shape out(r);
  for (size_t k = 0; k < r; ++k) {
    const int64_t da = k < a.size() ? a[a.size() - 1 - k] : 1;
    const int64_t db = k < b.size() ? b[b.size() - 1 - k] : 1;
    if (da != db && da != 1 && db != 1) {
      ShapeError(op, "shapes " + ShapeString(a) + " and " + ShapeString(b) +
                         " are not broadcastable");
    }
    out[r - 1 - k] = da == 1 ? db : da;
  }
  return out;
}

template <typename T>
Tensor<T> Add(const Tensor<T> &a, const Tensor<T> &b) {
  return Binary(
      a, b, "Add", [](T x, T y) { return x + y; },
      [](T g, T, T, T *ga, T *gb) {
        if (ga) *ga += g;
        if (gb) *gb += g;
      });
}

template <typename T>
Tensor<T> Sub(const Tensor<T> &a, const Tensor<T> &b) {
  return Binary(
      a, b, "Sub", [](T x, T y) { return x - y; },
      [](T g, T, T, T *ga, T *gb) {
        if (ga) *ga += g;
        if (gb) *gb -= g;
      });
}

template <typename T>
Tensor<T> Mul(const Tensor<T> &a, const Tensor<T> &b) {
  return Binary(
      a, b, "Mul", [](T x, T y) { return x * y; },
      [](T g, T x, T y, T *ga, T *gb) {
        if (ga) *ga += g * y;
        if (gb) *gb += g * x;
      });
}

template <typename T>
Tensor<T> Scale(const Tensor<T> &a, T factor) {
  return Unary(
      a, "Scale", [factor](T x) { return x * factor; }, [factor](T, T) { return factor; });
}

template <typename T>
Tensor<T> MatMul(const Tensor<T> &a, const Tensor<T> &b, bool transpose_b) {
  const char *op = "MatMul";
  if (a.rank() < 2 || b.rank() < 2) {
    ShapeError(op, "operands need rank >= 2, got " + ShapeString(a.shape()) + " and " +
                       ShapeString(b.shape()));
  }
  const int64_t m = a.dim(-2), k = a.dim(-1);
  const int64_t bk = transpose_b ? b.dim(-1) : b.dim(-2);
  const int64_t n = transpose_b ? b.dim(-2) : b.dim(-1);
  if (bk != k) {
    ShapeError(op, "inner dimensions differ: " + ShapeString(a.shape()) + " and " +
                       ShapeString(b.shape()) + (transpose_b ? " (transposed)" : ""));
  }
  Shape out = a.shape();
  out.back() = n;
  const bool shared = b.rank() == 2;
  int64_t batches = 1;
  if (shared) {
    batches = 1;
  } else {
    if (b.rank() != a.rank() ||
        !std::equal(a.shape().begin(), a.shape().end() - 2, b.shape().begin())) {
      ShapeError(op, "batch axes differ: " + ShapeString(a.shape()) + " and " +
                         ShapeString(b.shape()));
    }
    batches = NumElements(a.shape()) / (m * k);
  }
  // With a shared right operand all leading axes fold into the rows.
  const int64_t rows = shared ? NumElements(a.shape()) / k : m;
  std::vector<T> data(static_cast<size_t>(NumElements(out)));
  for (int64_t i = 0; i < batches; ++i) {
    Gemm(a.data() + i * rows * k, b.data() + (shared ? 0 : i * k * n), data.data() + i * rows * n,
         rows, k, n, transpose_b, false);
  }
  return Record<T>(
      std::move(out), std::move(data), {a.ptr(), b.ptr()}, op,
      [=](Node<T> &self) {
        Node<T> &na = *self.parents[0];
        Node<T> &nb = *self.parents[1];
        const T *g = self.grad.data();
        for (int64_t i = 0; i < batches; ++i) {
          const T *gi = g + i * rows * n;
          const T *ai = na.data.data() + i * rows * k;
          const int64_t boff = shared ? 0 : i * k * n;
          const T *bi = nb.data.data() + boff;
          if (na.requires_grad) {
            // dA = dC * op(B)^T.
            MMap<T> ga(na.Grad().data() + i * rows * k, rows, k);
            if (transpose_b) {
              ga.noalias() += CMap<T>(gi, rows, n) * CMap<T>(bi, n, k);
            } else {
              ga.noalias() += CMap<T>(gi, rows, n) * CMap<T>(bi, k, n).transpose();
            }
          }
          if (nb.requires_grad) {
            if (transpose_b) {
              // dB[n, k] = dC^T * A.
              MMap<T>(nb.Grad().data() + boff, n, k).noalias() +=
                  CMap<T>(gi, rows, n).transpose() * CMap<T>(ai, rows, k);
            } else {
              MMap<T>(nb.Grad().data() + boff, k, n).noalias() +=
                  CMap<T>(ai, rows, k).transpose() * CMap<T>(gi, rows, n);
            }
          }
        }
      });
}

template <typename T>
Tensor<T> Sum(const Tensor<T> &a) {
  double total = 0.0;
  for (T x : a.values()) total += x;
  return Record<T>({}, {static_cast<T>(total)}, {a.ptr()}, "Sum", [](Node<T> &self) {
    const T g = self.grad[0];
    for (T &x : self.parents[0]->Grad()) x += g;
  });
}

template <typename T>
Tensor<T> Mean(const Tensor<T> &a) {
  if (a.numel() == 0) ShapeError("Mean", "empty tensor");
  double total = 0.0;
  for (T x : a.values()) total += x;
  const T inv = T(1) / static_cast<T>(a.numel());
  return Record<T>({}, {static_cast<T>(total) * inv}, {a.ptr()}, "Mean", [inv](Node<T> &self) {
    const T g = self.grad[0] * inv;
    for (T &x : self.parents[0]->Grad()) x += g;
  });
}

template <typename T>
Tensor<T> Relu(const Tensor<T> &a) {
  return Unary(
      a, "Relu", [](T x) { return x > T(0) ? x : T(0); },
      [](T x, T) { return x > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> Gelu(const Tensor<T> &a) {
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  return Unary(
      a, "Gelu",
      [](T x) { return static_cast<T>(0.5 * x * (1.0 + std::erf(x * kInvSqrt2))); },
      [](T x, T) {
        const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
        const double pdf = kInvSqrt2Pi * std::exp(-0.5 * double(x) * x);
        return static_cast<T>(cdf + x * pdf);
      });
}

template <typename T>
Tensor<T> Tanh(const Tensor<T> &a) {
  return Unary(
      a, "Tanh", [](T x) { return std::tanh(x); }, [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Tensor<T> Sigmoid(const Tensor<T> &a) {
  return Unary(
      a, "Sigmoid",
      [](T x) {
        if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
        const T e = std::exp(x);
        return e / (T(1) + e);
      },
      [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> Softmax(const Tensor<T> &a, int axis) {
  const int ax = NormalizeAxis(axis, a.rank(), "Softmax");
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < ax; ++i) outer *= a.shape()[i];
  for (int i = ax + 1; i < a.rank(); ++i) inner *= a.shape()[i];
  const int64_t n = a.shape()[ax];
  std::vector<T> y(a.values().size());
  const T *x = a.data();
  for (int64_t o = 0; o < outer; ++o) {
    for (int64_t in = 0; in < inner; ++in) {
      const int64_t base = o * n * inner + in;
      T mx = -std::numeric_limits<T>::infinity();
      for (int64_t j = 0; j < n; ++j) mx = std::max(mx, x[base + j * inner]);
      T total = 0;
      for (int64_t j = 0; j < n; ++j) {
        const T e = std::exp(x[base + j * inner] - mx);
        y[base + j * inner] = e;
        total += e;
      }
      const T inv = T(1) / total;
      for (int64_t j = 0; j < n; ++j) y[base + j * inner] *= inv;
    }
  }
  return Record<T>(a.shape(), std::move(y), {a.ptr()}, "Softmax",
                   [outer, inner, n](Node<T> &self) {
                     T *ga = self.parents[0]->Grad().data();
                     const T *g = self.grad.data();
                     const T *yv = self.data.data();
                     for (int64_t o = 0; o < outer; ++o) {
                       for (int64_t in = 0; in < inner; ++in) {
                         const int64_t base = o * n * inner + in;
                         T dot = 0;
                         for (int64_t j = 0; j < n; ++j) {
                           dot += g[base + j * inner] * yv[base + j * inner];
                         }
                         for (int64_t j = 0; j < n; ++j) {
                           const int64_t idx = base + j * inner;
                           ga[idx] += yv[idx] * (g[idx] - dot);
                         }
                       }
                     }
                   });
}

template <typename T>
Tensor<T> LayerNorm(const Tensor<T> &x, const Tensor<T> &gain, const Tensor<T> &bias,
                    double epsilon) {
  const char *op = "LayerNorm";
  if (x.rank() < 1) ShapeError(op, "input must have rank >= 1");
  const int64_t d = x.dim(-1);
  if (gain.shape() != Shape{d} || bias.shape() != Shape{d}) {
    ShapeError(op, "gain " + ShapeString(gain.shape()) + " and bias " + ShapeString(bias.shape()) +
                       " must match the last axis of " + ShapeString(x.shape()));
  }
  const int64_t rows = d == 0 ? 0 : x.numel() / d;
  auto xhat = std::make_shared<std::vector<T>>(x.values().size());
  auto rstd = std::make_shared<std::vector<T>>(static_cast<size_t>(rows));
  std::vector<T> y(x.values().size());
  const T *px = x.data();
  const T *pg = gain.data();
  const T *pb = bias.data();
  for (int64_t r = 0; r < rows; ++r) {
    const T *row = px + r * d;
    double mean = 0.0;
    for (int64_t j = 0; j < d; ++j) mean += row[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (int64_t j = 0; j < d; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + epsilon);
    (*rstd)[r] = static_cast<T>(inv);
    for (int64_t j = 0; j < d; ++j) {
      const T h = static_cast<T>((row[j] - mean) * inv);
      (*xhat)[r * d + j] = h;
      y[r * d + j] = h * pg[j] + pb[j];
    }
  }
  return Record<T>(
      x.shape(), std::move(y), {x.ptr(), gain.ptr(), bias.ptr()}, op,
      [xhat, rstd, rows, d](Node<T> &self) {
        Node<T> &nx = *self.parents[0];
        Node<T> &ng = *self.parents[1];
        Node<T> &nb = *self.parents[2];
        const T *g = self.grad.data();
        const T *gain_v = ng.data.data();
        T *gx = nx.requires_grad ? nx.Grad().data() : nullptr;
        T *gg = ng.requires_grad ? ng.Grad().data() : nullptr;
        T *gb = nb.requires_grad ? nb.Grad().data() : nullptr;
        std::vector<T> dxhat(static_cast<size_t>(d));
        for (int64_t r = 0; r < rows; ++r) {
          const T *gr = g + r * d;
          const T *hr = xhat->data() + r * d;
          T mean_dh = 0, mean_dh_h = 0;
          for (int64_t j = 0; j < d; ++j) {
            if (gg) gg[j] += gr[j] * hr[j];
            if (gb) gb[j] += gr[j];
            dxhat[j] = gr[j] * gain_v[j];
            mean_dh += dxhat[j];
            mean_dh_h += dxhat[j] * hr[j];
          }
          if (!gx) continue;
          mean_dh /= static_cast<T>(d);
          mean_dh_h /= static_cast<T>(d);
          const T s = (*rstd)[r];
          for (int64_t j = 0; j < d; ++j) {
            gx[r * d + j] += s * (dxhat[j] - mean_dh - hr[j] * mean_dh_h);
          }
        }
      });
}

template <typename T>
Tensor<T> Embedding(const Tensor<T> &weight, const std::vector<int32_t> &ids,
                    const Shape &ids_shape) {
  const char *op = "Embedding";
  if (weight.rank() != 2) ShapeError(op, "weight must be [V, D], got " + ShapeString(weight.shape()));
  if (NumElements(ids_shape) != static_cast<int64_t>(ids.size())) {
    ShapeError(op, "ids shape " + ShapeString(ids_shape) + " does not match " +
                       std::to_string(ids.size()) + " ids");
  }
  const int64_t v = weight.dim(0), d = weight.dim(1);
  std::vector<T> data(ids.size() * static_cast<size_t>(d));
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= v) {
      ShapeError(op, "id " + std::to_string(ids[i]) + " outside vocabulary of " + std::to_string(v));
    }
    std::copy_n(weight.data() + ids[i] * d, d, data.begin() + i * d);
  }
  Shape out = ids_shape;
  out.push_back(d);
  return Record<T>(std::move(out), std::move(data), {weight.ptr()}, op,
                   [ids, d](Node<T> &self) {
                     T *gw = self.parents[0]->Grad().data();
                     const T *g = self.grad.data();
                     for (size_t i = 0; i < ids.size(); ++i) {
                       T *row = gw + ids[i] * d;
                       const T *gi = g + i * d;
                       for (int64_t j = 0; j < d; ++j) row[j] += gi[j];
                     }
                   });
}

template <typename T>
Tensor<T> Concat(const std::vector<Tensor<T>> &parts, int axis) {
  const char *op = "Concat";
  if (parts.empty()) ShapeError(op, "no inputs");
  const Shape &first = parts[0].shape();
  const int ax = NormalizeAxis(axis, static_cast<int>(first.size()), op);
  Shape out = first;
  out[ax] = 0;
  std::vector<int64_t> lengths;
  for (const auto &p : parts) {
    Shape s = p.shape();
    if (s.size() != first.size()) {
      ShapeError(op, "rank mismatch " + ShapeString(first) + " and " + ShapeString(s));
    }
    for (size_t i = 0; i < s.size(); ++i) {
      if (static_cast<int>(i) != ax && s[i] != first[i]) {
        ShapeError(op, "shapes " + ShapeString(first) + " and " + ShapeString(s) +
                           " differ off the concatenation axis");
      }
    }
    lengths.push_back(s[ax]);
    out[ax] += s[ax];
  }
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < ax; ++i) outer *= first[i];
  for (size_t i = ax + 1; i < first.size(); ++i) inner *= first[i];
  const int64_t total = out[ax];
  std::vector<T> data(static_cast<size_t>(NumElements(out)));
  int64_t offset = 0;
  std::vector<NodePtr<T>> parents;
  for (size_t p = 0; p < parts.size(); ++p) {
    const int64_t block = lengths[p] * inner;
    for (int64_t o = 0; o < outer; ++o) {
      std::copy_n(parts[p].data() + o * block, block, data.begin() + (o * total + offset) * inner);
    }
    offset += lengths[p];
    parents.push_back(parts[p].ptr());
  }
  return Record<T>(std::move(out), std::move(data), std::move(parents), op,
                   [lengths, outer, inner, total](Node<T> &self) {
                     int64_t offset = 0;
                     for (size_t p = 0; p < lengths.size(); ++p) {
                       Node<T> &np = *self.parents[p];
                       const int64_t block = lengths[p] * inner;
                       if (np.requires_grad) {
                         T *gp = np.Grad().data();
                         for (int64_t o = 0; o < outer; ++o) {
                           const T *src = self.grad.data() + (o * total + offset) * inner;
                           for (int64_t j = 0; j < block; ++j) gp[o * block + j] += src[j];
                         }
                       }
                       offset += lengths[p];
                     }
                   });
}

template <typename T>
Tensor<T> Slice(const Tensor<T> &a, int axis, int64_t start, int64_t length) {
  const char *op = "Slice";
  const int ax = NormalizeAxis(axis, a.rank(), op);
  const int64_t n = a.shape()[ax];
  if (start < 0 || length < 0 || start + length > n) {
    ShapeError(op, "range [" + std::to_string(start) + ", " + std::to_string(start + length) +
                       ") outside axis of size " + std::to_string(n) + " in " +
                       ShapeString(a.shape()));
  }
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < ax; ++i) outer *= a.shape()[i];
  for (int i = ax + 1; i < a.rank(); ++i) inner *= a.shape()[i];
  Shape out = a.shape();
  out[ax] = length;
  std::vector<T> data(static_cast<size_t>(NumElements(out)));
  for (int64_t o = 0; o < outer; ++o) {
    std::copy_n(a.data() + (o * n + start) * inner, length * inner,
                data.begin() + o * length * inner);
  }
  return Record<T>(std::move(out), std::move(data), {a.ptr()}, op,
                   [outer, inner, n, start, length](Node<T> &self) {
                     T *ga = self.parents[0]->Grad().data();
                     for (int64_t o = 0; o < outer; ++o) {
                       const T *src = self.grad.data() + o * length * inner;
                       T *dst = ga + (o * n + start) * inner;
                       for (int64_t j = 0; j < length * inner; ++j) dst[j] += src[j];
                     }
                   });
}

template <typename T>
Tensor<T> Permute(const Tensor<T> &a, const std::vector<int> &perm) {
  const char *op = "Permute";
  const int r = a.rank();
  if (static_cast<int>(perm.size()) != r) {
    ShapeError(op, "permutation of length " + std::to_string(perm.size()) + " for " +
                       ShapeString(a.shape()));
  }
  std::vector<bool> used(r, false);
  for (int p : perm) {
    if (p < 0 || p >= r || used[p]) ShapeError(op, "invalid permutation");
    used[p] = true;
  }
  Shape out(r);
  std::vector<int64_t> in_stride(r), stride(r);
  int64_t s = 1;
  for (int i = r - 1; i >= 0; --i) {
    in_stride[i] = s;
    s *= a.shape()[i];
  }
  for (int i = 0; i < r; ++i) {
    out[i] = a.shape()[perm[i]];
    stride[i] = in_stride[perm[i]];
  }
  std::vector<T> data(static_cast<size_t>(a.numel()));
  StridedVisit(out, stride, [&](int64_t i, int64_t j) { data[i] = a.data()[j]; });
  return Record<T>(std::move(out), std::move(data), {a.ptr()}, op, [stride](Node<T> &self) {
    T *ga = self.parents[0]->Grad().data();
    const T *g = self.grad.data();
    StridedVisit(self.shape, stride, [&](int64_t i, int64_t j) { ga[j] += g[i]; });
  });
}

template <typename T>
Tensor<T> Transpose(const Tensor<T> &a, int axis0, int axis1) {
  const int r = a.rank();
  std::vector<int> perm(r);
  std::iota(perm.begin(), perm.end(), 0);
  std::swap(perm[NormalizeAxis(axis0, r, "Transpose")], perm[NormalizeAxis(axis1, r, "Transpose")]);
  return Permute(a, perm);
}

template <typename T>
Tensor<T> Reshape(const Tensor<T> &a, Shape shape) {
  const char *op = "Reshape";
  int inferred = -1;
  int64_t known = 1;
  for (size_t i = 0; i < shape.size(); ++i) {
    if (shape[i] == -1) {
      if (inferred >= 0) ShapeError(op, "more than one inferred axis");
      inferred = static_cast<int>(i);
    } else {
      known *= shape[i];
    }
  }
  if (inferred >= 0 && known > 0) shape[inferred] = a.numel() / known;
  if (NumElements(shape) != a.numel()) {
    ShapeError(op, "cannot view " + ShapeString(a.shape()) + " as " + ShapeString(shape));
  }
  return Record<T>(std::move(shape), a.values(), {a.ptr()}, op, [](Node<T> &self) {
    T *ga = self.parents[0]->Grad().data();
    for (size_t i = 0; i < self.grad.size(); ++i) ga[i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> MaskedFill(const Tensor<T> &a, const Mask &mask, T value) {
  const char *op = "MaskedFill";
  if (static_cast<int64_t>(mask.data.size()) != NumElements(mask.shape)) {
    ShapeError(op, "mask data does not match mask shape " + ShapeString(mask.shape));
  }
  if (BroadcastShapes(a.shape(), mask.shape, op) != a.shape()) {
    ShapeError(op, "mask " + ShapeString(mask.shape) + " does not broadcast to " +
                       ShapeString(a.shape()));
  }
  auto bits = std::make_shared<std::vector<uint8_t>>(ExpandMask(a.shape(), mask));
  std::vector<T> data(a.values());
  for (size_t i = 0; i < data.size(); ++i) {
    if ((*bits)[i]) data[i] = value;
  }
  return Record<T>(a.shape(), std::move(data), {a.ptr()}, op, [bits](Node<T> &self) {
    T *ga = self.parents[0]->Grad().data();
    for (size_t i = 0; i < self.grad.size(); ++i) {
      if (!(*bits)[i]) ga[i] += self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> Dropout(const Tensor<T> &a, double p, Rng &rng, bool training) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "dropout rate must lie in [0, 1)");
  }
  if (!training || p == 0.0) return a;
  const T scale = static_cast<T>(1.0 / (1.0 - p));
  auto keep = std::make_shared<std::vector<T>>(a.values().size());
  std::vector<T> data(a.values().size());
  for (size_t i = 0; i < data.size(); ++i) {
    (*keep)[i] = rng.UniformReal() >= p ? scale : T(0);
    data[i] = a.data()[i] * (*keep)[i];
  }
  return Record<T>(a.shape(), std::move(data), {a.ptr()}, "Dropout", [keep](Node<T> &self) {
    T *ga = self.parents[0]->Grad().data();
    for (size_t i = 0; i < self.grad.size(); ++i) ga[i] += self.grad[i] * (*keep)[i];
  });
}

template <typename T>
Tensor<T> CrossEntropy(const Tensor<T> &logits, const std::vector<int32_t> &targets,
                       int32_t ignore_index) {
  const char *op = "CrossEntropy";
  if (logits.rank() != 2) ShapeError(op, "logits must be [N, V], got " + ShapeString(logits.shape()));
  const int64_t n = logits.dim(0), v = logits.dim(1);
  if (static_cast<int64_t>(targets.size()) != n) {
    ShapeError(op, std::to_string(targets.size()) + " targets for logits " +
                       ShapeString(logits.shape()));
  }
  auto lse = std::make_shared<std::vector<T>>(static_cast<size_t>(n), T(0));
  double total = 0.0;
  int64_t count = 0;
  const T *x = logits.data();
  for (int64_t i = 0; i < n; ++i) {
    const int32_t t = targets[i];
    if (t == ignore_index) continue;
    if (t < 0 || t >= v) {
      ShapeError(op, "target " + std::to_string(t) + " outside [0, " + std::to_string(v) + ")");
    }
    const T *row = x + i * v;
    const T mx = *std::max_element(row, row + v);
    double s = 0.0;
    for (int64_t j = 0; j < v; ++j) s += std::exp(static_cast<double>(row[j] - mx));
    (*lse)[i] = static_cast<T>(mx + std::log(s));
    total += static_cast<double>((*lse)[i]) - row[t];
    ++count;
  }
  const T inv = count ? T(1) / static_cast<T>(count) : T(0);
  return Record<T>(
      {}, {static_cast<T>(total) * inv}, {logits.ptr()}, op,
      [lse, targets, ignore_index, n, v, inv](Node<T> &self) {
        Node<T> &nl = *self.parents[0];
        T *g = nl.Grad().data();
        const T scale = self.grad[0] * inv;
        for (int64_t i = 0; i < n; ++i) {
          if (targets[i] == ignore_index) continue;
          const T *row = nl.data.data() + i * v;
          T *gr = g + i * v;
          const T l = (*lse)[i];
          for (int64_t j = 0; j < v; ++j) gr[j] += scale * std::exp(row[j] - l);
          gr[targets[i]] -= scale;
        }
      });
}

#define MPE_AG_INSTANTIATE(T)                                                              \
  template Tensor<T> Add(const Tensor<T> &, const Tensor<T> &);                            \
  template Tensor<T> Sub(const Tensor<T> &, const Tensor<T> &);                            \
  template Tensor<T> Mul(const Tensor<T> &, const Tensor<T> &);                            \
  template Tensor<T> Scale(const Tensor<T> &, T);                                          \
  template Tensor<T> MatMul(const Tensor<T> &, const Tensor<T> &, bool);                   \
  template Tensor<T> Sum(const Tensor<T> &);                                               \
  template Tensor<T> Mean(const Tensor<T> &);                                              \
  template Tensor<T> Relu(const Tensor<T> &);                                              \
  template Tensor<T> Gelu(const Tensor<T> &);                                              \
  template Tensor<T> Tanh(const Tensor<T> &);                                              \
  template Tensor<T> Sigmoid(const Tensor<T> &);                                           \
  template Tensor<T> Softmax(const Tensor<T> &, int);                                      \
  template Tensor<T> LayerNorm(const Tensor<T> &, const Tensor<T> &, const Tensor<T> &,    \
                               double);                                                    \
  template Tensor<T> Embedding(const Tensor<T> &, const std::vector<int32_t> &,            \
                               const Shape &);                                             \
  template Tensor<T> Concat(const std::vector<Tensor<T>> &, int);                          \
  template Tensor<T> Slice(const Tensor<T> &, int, int64_t, int64_t);                      \
  template Tensor<T> Permute(const Tensor<T> &, const std::vector<int> &);                 \
  template Tensor<T> Transpose(const Tensor<T> &, int, int);                               \
  template Tensor<T> Reshape(const Tensor<T> &, Shape);                                    \
  template Tensor<T> MaskedFill(const Tensor<T> &, const Mask &, T);                       \
  template Tensor<T> Dropout(const Tensor<T> &, double, Rng &, bool);                      \
  template Tensor<T> CrossEntropy(const Tensor<T> &, const std::vector<int32_t> &, int32_t);

MPE_AG_INSTANTIATE(float)
MPE_AG_INSTANTIATE(double)

#undef MPE_AG_INSTANTIATE

}  // namespace mpe::ag
