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

#include "mpe/autograd/tensor.h"

#include <unordered_set>
#include <utility>

#include "mpe/base/error.h"

namespace mpe::ag {
namespace {

thread_local bool grad_enabled = true;

}  // namespace

int64_t NumElements(const Shape &shape) {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  return n;
}

std::string ShapeString(const Shape &shape) {
  std::string out = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

template <typename T>
std::vector<T> &Node<T>::Grad() {
  if (grad.empty()) grad.assign(data.size(), T(0));
  return grad;
}

template <typename T>
Tensor<T> Tensor<T>::Zeros(Shape shape, bool requires_grad) {
  return Full(std::move(shape), T(0), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::Full(Shape shape, T value, bool requires_grad) {
  std::vector<T> data(static_cast<size_t>(NumElements(shape)), value);
  return FromData(std::move(shape), std::move(data), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::FromData(Shape shape, std::vector<T> data, bool requires_grad) {
  for (int64_t d : shape) {
    if (d < 0) throw Error(ErrorCode::kInvalidArgument, "negative dimension in " + ShapeString(shape));
  }
  if (static_cast<int64_t>(data.size()) != NumElements(shape)) {
    throw Error(ErrorCode::kInvalidArgument,
                "tensor of shape " + ShapeString(shape) + " cannot hold " +
                    std::to_string(data.size()) + " values");
  }
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

template <typename T>
int64_t Tensor<T>::dim(int axis) const {
  const int r = rank();
  const int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) {
    throw Error(ErrorCode::kInvalidArgument,
                "axis " + std::to_string(axis) + " out of range for " + ShapeString(shape()));
  }
  return node_->shape[a];
}

template <typename T>
T Tensor<T>::item() const {
  if (node_->data.size() != 1) {
    throw Error(ErrorCode::kInvalidArgument, "item() of a tensor with shape " + ShapeString(shape()));
  }
  return node_->data[0];
}

template <typename T>
const std::vector<T> &Tensor<T>::grad() const {
  return node_->Grad();
}

template <typename T>
Tensor<T> Tensor<T>::Detach() const {
  return FromData(shape(), values(), false);
}

template <typename T>
void Backward(const Tensor<T> &loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "backward needs a scalar loss, got shape " +
                    (loss.defined() ? ShapeString(loss.shape()) : std::string("<undefined>")));
  }
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS; recurrent graphs are too deep for recursion.
  std::vector<Node<T> *> order;
  std::unordered_set<Node<T> *> visited;
  std::vector<std::pair<Node<T> *, size_t>> stack;
  stack.push_back({loss.node(), 0});
  visited.insert(loss.node());
  while (!stack.empty()) {
    auto &[node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T> *parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.push_back({parent, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss.node()->Grad()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T> *node = *it;
    if (!node->backward || node->grad.empty()) continue;
    node->backward(*node);
    node->grad.clear();
    node->grad.shrink_to_fit();
  }
}

bool GradEnabled() { return grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(grad_enabled) { grad_enabled = false; }
NoGradGuard::~NoGradGuard() { grad_enabled = previous_; }

template struct Node<float>;
template struct Node<double>;
template class Tensor<float>;
template class Tensor<double>;
template void Backward<float>(const Tensor<float> &);
template void Backward<double>(const Tensor<double> &);

}  // namespace mpe::ag
