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

// Dense row-major tensors with reverse-mode automatic differentiation.
//
// Every op result records its inputs and a backward rule when gradients are
// enabled and some input requires them. Backward() walks the recorded graph
// from a scalar loss in reverse topological order and accumulates gradients
// into every tensor that requires them, so a tensor used twice receives the
// sum of both contributions.

#ifndef MPE_AUTOGRAD_TENSOR_H_
#define MPE_AUTOGRAD_TENSOR_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace mpe::ag {

using Shape = std::vector<int64_t>;

int64_t NumElements(const Shape &shape);
std::string ShapeString(const Shape &shape);

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> data;
  // Empty until a gradient flows in.
  std::vector<T> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node &)> backward;
  const char *op = "leaf";

  // Allocates a zero gradient on first use and returns it.
  std::vector<T> &Grad();
};

template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  static Tensor Zeros(Shape shape, bool requires_grad = false);
  static Tensor Full(Shape shape, T value, bool requires_grad = false);
  // Throws when data.size() does not match the shape.
  static Tensor FromData(Shape shape, std::vector<T> data, bool requires_grad = false);
  static Tensor Scalar(T value) { return FromData({}, {value}); }

  bool defined() const { return node_ != nullptr; }
  const Shape &shape() const { return node_->shape; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  // Negative indices count from the end.
  int64_t dim(int axis) const;
  int64_t numel() const { return static_cast<int64_t>(node_->data.size()); }

  T *data() { return node_->data.data(); }
  const T *data() const { return node_->data.data(); }
  std::vector<T> &values() { return node_->data; }
  const std::vector<T> &values() const { return node_->data; }
  // Value of a one-element tensor.
  T item() const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool value) { node_->requires_grad = value; }
  bool has_grad() const { return !node_->grad.empty(); }
  // Zero-filled when no gradient has arrived yet.
  const std::vector<T> &grad() const;
  std::vector<T> &mutable_grad() { return node_->Grad(); }
  void ZeroGrad() { node_->grad.clear(); }

  // Same values, cut from the graph.
  Tensor Detach() const;

  Node<T> *node() const { return node_.get(); }
  const std::shared_ptr<Node<T>> &ptr() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

// Populates gradients of every tensor reachable from `loss` that requires
// them. `loss` must hold exactly one element.
template <typename T>
void Backward(const Tensor<T> &loss);

bool GradEnabled();

// Disables graph recording in the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard &) = delete;
  NoGradGuard &operator=(const NoGradGuard &) = delete;

 private:
  bool previous_;
};

}  // namespace mpe::ag

#endif  // MPE_AUTOGRAD_TENSOR_H_
