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

// Encoder-decoder models: the recurrent baseline, the single-source
// transformer and the dual-source transformer whose two encoders share
// parameters.
//
// Every model reads a ModelInput. The dual-source model encodes the
// requested property names and the article separately; the other two read
// one source, the property names followed by a field separator and the
// article. Sources longer than max_source_len are cut to their prefix.

#ifndef MPE_MODELS_MODEL_H_
#define MPE_MODELS_MODEL_H_

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mpe/autograd/ops.h"
#include "mpe/autograd/optim.h"
#include "mpe/autograd/tensor.h"
#include "mpe/base/random.h"
#include "mpe/models/config.h"

namespace mpe {

// Token ids the models rely on; they match the tokenizer's specials.
inline constexpr int32_t kPadId = 0;
inline constexpr int32_t kBosId = 1;
inline constexpr int32_t kEosId = 2;
inline constexpr int32_t kFieldSepId = 4;

struct ModelInput {
  std::vector<int32_t> properties;
  std::vector<int32_t> article;
};

// Encoder output rows are examples. Transformers keep one state tensor
// [B, S, D] and one key mask [B, 1, 1, S] per source; the recurrent model
// keeps final hidden and cell states [B, H] per layer and no masks.
template <typename T>
struct EncoderMemory {
  std::vector<ag::Tensor<T>> states;
  std::vector<ag::Mask> masks;
  // Model-specific tensors derived from the states, batch-major.
  std::vector<ag::Tensor<T>> cache;
  int64_t batch = 0;
};

template <typename T>
class Model {
 public:
  Model(ModelConfig config, int32_t vocab_size);
  virtual ~Model() = default;
  Model(const Model &) = delete;
  Model &operator=(const Model &) = delete;

  const ModelConfig &config() const { return config_; }
  int32_t vocab_size() const { return vocab_size_; }
  const std::vector<ag::NamedParameter<T>> &parameters() const { return params_; }
  // Null when absent.
  ag::Tensor<T> FindParameter(const std::string &name) const;
  int64_t ParameterCount() const;

  virtual EncoderMemory<T> Encode(std::span<const ModelInput> inputs, bool training,
                                  Rng *rng) = 0;
  // decoder_inputs start with BOS and are padded with PAD to equal length.
  // Returns logits [B, L, V], or [B, 1, V] for the last position only.
  virtual ag::Tensor<T> Decode(const EncoderMemory<T> &memory,
                               const std::vector<std::vector<int32_t>> &decoder_inputs,
                               bool training, Rng *rng, bool last_only = false) = 0;

  // Teacher-forced logits for BOS + target, [B, L, V] with L = longest
  // target + 1.
  ag::Tensor<T> Logits(std::span<const ModelInput> inputs,
                       const std::vector<std::vector<int32_t>> &targets, bool training, Rng *rng);
  // Mean cross-entropy per target token (EOS included), ignoring padding.
  ag::Tensor<T> Loss(std::span<const ModelInput> inputs,
                     const std::vector<std::vector<int32_t>> &targets, bool training, Rng *rng);

 protected:
  // Registers a trainable tensor initialized from N(0, stddev^2), or to
  // `fill` when stddev is 0.
  ag::Tensor<T> AddParameter(const std::string &name, ag::Shape shape, double stddev, Rng &rng,
                             double fill = 0.0);

  ModelConfig config_;
  int32_t vocab_size_;

 private:
  std::vector<ag::NamedParameter<T>> params_;
};

template <typename T>
std::unique_ptr<Model<T>> CreateModel(const ModelConfig &config, int32_t vocab_size,
                                      uint64_t seed);

// Copies of the selected memory rows, in order; rows may repeat.
template <typename T>
EncoderMemory<T> SelectRows(const EncoderMemory<T> &memory, std::span<const int64_t> rows);

// Single-source layout: properties, field separator, article, cut to
// max_len.
std::vector<int32_t> ConcatenatedSource(const ModelInput &input, size_t max_len);

}  // namespace mpe

#endif  // MPE_MODELS_MODEL_H_
