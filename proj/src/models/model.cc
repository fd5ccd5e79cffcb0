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

#include "mpe/models/model.h"

#include <algorithm>

#include "architectures.h"
#include "layers.h"
#include "mpe/base/error.h"

namespace mpe {

namespace internal {

std::vector<int32_t> PadIds(const std::vector<std::vector<int32_t>> &rows, int32_t pad,
                            int64_t *width) {
  size_t w = 0;
  for (const auto &r : rows) {
    if (r.empty()) throw Error(ErrorCode::kInvalidArgument, "empty token sequence");
    w = std::max(w, r.size());
  }
  std::vector<int32_t> out(rows.size() * w, pad);
  for (size_t i = 0; i < rows.size(); ++i) std::copy(rows[i].begin(), rows[i].end(), out.begin() + i * w);
  *width = static_cast<int64_t>(w);
  return out;
}

ag::Mask KeyPaddingMask(const std::vector<std::vector<int32_t>> &rows, int64_t width) {
  const auto b = static_cast<int64_t>(rows.size());
  ag::Mask mask{{b, 1, 1, width}, std::vector<uint8_t>(static_cast<size_t>(b * width), 0)};
  for (int64_t i = 0; i < b; ++i) {
    for (int64_t j = static_cast<int64_t>(rows[i].size()); j < width; ++j) mask.data[i * width + j] = 1;
  }
  return mask;
}

ag::Mask CausalMask(int64_t length) {
  ag::Mask mask{{length, length}, std::vector<uint8_t>(static_cast<size_t>(length * length), 0)};
  for (int64_t i = 0; i < length; ++i) {
    for (int64_t j = i + 1; j < length; ++j) mask.data[i * length + j] = 1;
  }
  return mask;
}

}  // namespace internal

std::vector<int32_t> ConcatenatedSource(const ModelInput &input, size_t max_len) {
  std::vector<int32_t> out = input.properties;
  out.push_back(kFieldSepId);
  out.insert(out.end(), input.article.begin(), input.article.end());
  if (out.size() > max_len) out.resize(max_len);
  return out;
}

template <typename T>
Model<T>::Model(ModelConfig config, int32_t vocab_size)
    : config_(std::move(config)), vocab_size_(vocab_size) {
  config_.Validate();
  if (vocab_size_ <= kFieldSepId) {
    throw Error(ErrorCode::kInvalidArgument, "vocabulary of " + std::to_string(vocab_size_) +
                                                 " ids is too small for a model");
  }
}

template <typename T>
ag::Tensor<T> Model<T>::AddParameter(const std::string &name, ag::Shape shape, double stddev,
                                     Rng &rng, double fill) {
  for (const auto &p : params_) {
    if (p.name == name) throw Error(ErrorCode::kInvalidArgument, "duplicate parameter " + name);
  }
  auto t = ag::Tensor<T>::Full(std::move(shape), static_cast<T>(fill), true);
  if (stddev > 0.0) {
    for (T &v : t.values()) v = static_cast<T>(stddev * rng.Normal());
  }
  params_.push_back({name, t});
  return t;
}

template <typename T>
ag::Tensor<T> Model<T>::FindParameter(const std::string &name) const {
  for (const auto &p : params_) {
    if (p.name == name) return p.tensor;
  }
  return {};
}

template <typename T>
int64_t Model<T>::ParameterCount() const {
  int64_t n = 0;
  for (const auto &p : params_) n += p.tensor.numel();
  return n;
}

template <typename T>
ag::Tensor<T> Model<T>::Logits(std::span<const ModelInput> inputs,
                               const std::vector<std::vector<int32_t>> &targets, bool training,
                               Rng *rng) {
  if (inputs.size() != targets.size() || inputs.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "need one target per input and a non-empty batch");
  }
  std::vector<std::vector<int32_t>> dec_inputs;
  size_t width = 0;
  for (const auto &t : targets) {
    const size_t n = std::min(t.size(), static_cast<size_t>(config_.max_target_len));
    std::vector<int32_t> row = {kBosId};
    row.insert(row.end(), t.begin(), t.begin() + static_cast<ptrdiff_t>(n));
    width = std::max(width, row.size());
    dec_inputs.push_back(std::move(row));
  }
  for (auto &row : dec_inputs) row.resize(width, kPadId);
  EncoderMemory<T> memory = Encode(inputs, training, rng);
  return Decode(memory, dec_inputs, training, rng);
}

template <typename T>
ag::Tensor<T> Model<T>::Loss(std::span<const ModelInput> inputs,
                             const std::vector<std::vector<int32_t>> &targets, bool training,
                             Rng *rng) {
  ag::Tensor<T> logits = Logits(inputs, targets, training, rng);
  const int64_t b = logits.dim(0), l = logits.dim(1);
  std::vector<int32_t> labels(static_cast<size_t>(b * l), -1);
  for (int64_t i = 0; i < b; ++i) {
    const auto &t = targets[i];
    const int64_t n = std::min<int64_t>(static_cast<int64_t>(t.size()), config_.max_target_len);
    for (int64_t j = 0; j < n; ++j) labels[i * l + j] = t[j];
    labels[i * l + n] = kEosId;
  }
  return ag::CrossEntropy(ag::Reshape(logits, {b * l, vocab_size_}), labels, -1);
}

template <typename T>
EncoderMemory<T> SelectRows(const EncoderMemory<T> &memory, std::span<const int64_t> rows) {
  EncoderMemory<T> out;
  out.batch = static_cast<int64_t>(rows.size());
  auto check = [&](int64_t r) {
    if (r < 0 || r >= memory.batch) throw Error(ErrorCode::kInvalidArgument, "row out of range");
  };
  auto select = [&](const ag::Tensor<T> &s) {
    const int64_t stride = s.numel() / memory.batch;
    ag::Shape shape = s.shape();
    shape[0] = out.batch;
    std::vector<T> data;
    data.reserve(static_cast<size_t>(stride * out.batch));
    for (int64_t r : rows) {
      check(r);
      data.insert(data.end(), s.data() + r * stride, s.data() + (r + 1) * stride);
    }
    return ag::Tensor<T>::FromData(std::move(shape), std::move(data));
  };
  for (const auto &s : memory.states) out.states.push_back(select(s));
  for (const auto &c : memory.cache) out.cache.push_back(select(c));
  for (const auto &m : memory.masks) {
    const int64_t stride = static_cast<int64_t>(m.data.size()) / memory.batch;
    ag::Mask sel{m.shape, {}};
    sel.shape[0] = out.batch;
    for (int64_t r : rows) {
      check(r);
      sel.data.insert(sel.data.end(), m.data.begin() + r * stride, m.data.begin() + (r + 1) * stride);
    }
    out.masks.push_back(std::move(sel));
  }
  return out;
}

template <typename T>
std::unique_ptr<Model<T>> CreateModel(const ModelConfig &config, int32_t vocab_size,
                                      uint64_t seed) {
  config.Validate();
  if (config.architecture == Architecture::kSeq2Seq) {
    return internal::MakeRecurrent<T>(config, vocab_size, seed);
  }
  return internal::MakeTransformer<T>(config, vocab_size, seed);
}

template class Model<float>;
template class Model<double>;
template EncoderMemory<float> SelectRows(const EncoderMemory<float> &, std::span<const int64_t>);
template EncoderMemory<double> SelectRows(const EncoderMemory<double> &, std::span<const int64_t>);
template std::unique_ptr<Model<float>> CreateModel(const ModelConfig &, int32_t, uint64_t);
template std::unique_ptr<Model<double>> CreateModel(const ModelConfig &, int32_t, uint64_t);

}  // namespace mpe
