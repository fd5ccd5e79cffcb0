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

#include <cmath>

#include "architectures.h"
#include "layers.h"
#include "mpe/base/error.h"

namespace mpe::internal {
namespace {

template <typename T>
struct Cell {
  Tensor<T> wx, wh, b;
};

// Unidirectional LSTM encoder-decoder without attention. The decoder starts
// from the encoder's final hidden and cell states; decoder layer i reads
// encoder layer min(i, encoder_layers - 1).
template <typename T>
class Recurrent : public Model<T> {
 public:
  Recurrent(const ModelConfig &config, int32_t vocab_size, uint64_t seed)
      : Model<T>(config, vocab_size) {
    Rng rng(seed);
    ParamFn<T> param = [&](const std::string &name, ag::Shape shape, double stddev, double fill) {
      return this->AddParameter(name, std::move(shape), stddev, rng, fill);
    };
    const int64_t d = config.embedding_dim, v = vocab_size;
    const double embed_std = 1.0 / std::sqrt(static_cast<double>(d));
    if (config.tie_all_embeddings) {
      encoder_embed_ = decoder_embed_ = output_ = param("embedding", {v, d}, embed_std, 0);
    } else {
      encoder_embed_ = param("encoder.embedding", {v, d}, embed_std, 0);
      decoder_embed_ = param("decoder.embedding", {v, d}, embed_std, 0);
      output_ = param("output.weight", {v, d}, embed_std, 0);
    }
    auto make_cell = [&](const std::string &name) {
      Cell<T> c;
      c.wx = param(name + ".input_weight", {d, 4 * d}, GlorotStd(d, 4 * d), 0);
      c.wh = param(name + ".hidden_weight", {d, 4 * d}, GlorotStd(d, 4 * d), 0);
      c.b = param(name + ".bias", {4 * d}, 0, 0);
      // Forget-gate bias starts at 1.
      for (int64_t j = d; j < 2 * d; ++j) c.b.values()[j] = T(1);
      return c;
    };
    for (int i = 0; i < config.encoder_layers; ++i) {
      encoder_.push_back(make_cell("encoder.layers." + std::to_string(i)));
    }
    for (int i = 0; i < config.decoder_layers; ++i) {
      decoder_.push_back(make_cell("decoder.layers." + std::to_string(i)));
    }
  }

  EncoderMemory<T> Encode(std::span<const ModelInput> inputs, bool training, Rng *rng) override {
    std::vector<std::vector<int32_t>> rows;
    for (const auto &in : inputs) {
      rows.push_back(ConcatenatedSource(in, static_cast<size_t>(this->config_.max_source_len)));
    }
    const auto b = static_cast<int64_t>(rows.size());
    int64_t width = 0;
    std::vector<int32_t> ids = PadIds(rows, kPadId, &width);
    std::vector<Tensor<T>> h, c;
    InitialState(b, h, c);
    Tensor<T> x = Embedded(encoder_embed_, ids, b, width);
    for (int64_t t = 0; t < width; ++t) {
      // 1 while row i is still inside its sequence.
      std::vector<T> keep(static_cast<size_t>(b));
      for (int64_t i = 0; i < b; ++i) keep[i] = t < static_cast<int64_t>(rows[i].size()) ? T(1) : T(0);
      Tensor<T> m = Tensor<T>::FromData({b, 1}, std::move(keep));
      Step(encoder_, TimeSlice(x, t), h, c, &m, training, rng);
    }
    EncoderMemory<T> memory;
    memory.batch = b;
    memory.states = h;
    memory.states.insert(memory.states.end(), c.begin(), c.end());
    return memory;
  }

  Tensor<T> Decode(const EncoderMemory<T> &memory,
                   const std::vector<std::vector<int32_t>> &decoder_inputs, bool training, Rng *rng,
                   bool last_only) override {
    const int64_t b = memory.batch;
    if (static_cast<int64_t>(decoder_inputs.size()) != b) {
      throw Error(ErrorCode::kInvalidArgument, "decoder batch does not match the encoder memory");
    }
    int64_t width = 0;
    std::vector<int32_t> ids = PadIds(decoder_inputs, kPadId, &width);
    const size_t enc_layers = encoder_.size();
    std::vector<Tensor<T>> h, c;
    for (size_t i = 0; i < decoder_.size(); ++i) {
      const size_t src = std::min(i, enc_layers - 1);
      h.push_back(memory.states[src]);
      c.push_back(memory.states[enc_layers + src]);
    }
    Tensor<T> x = Embedded(decoder_embed_, ids, b, width);
    std::vector<Tensor<T>> outputs;
    for (int64_t t = 0; t < width; ++t) {
      Step(decoder_, TimeSlice(x, t), h, c, nullptr, training, rng);
      if (!last_only || t == width - 1) {
        outputs.push_back(ag::Reshape(h.back(), {b, 1, this->config_.embedding_dim}));
      }
    }
    Tensor<T> out = outputs.size() == 1 ? outputs[0] : ag::Concat(outputs, 1);
    return ag::MatMul(out, output_, true);
  }

 private:
  void InitialState(int64_t b, std::vector<Tensor<T>> &h, std::vector<Tensor<T>> &c) const {
    for (size_t i = 0; i < encoder_.size(); ++i) {
      h.push_back(Tensor<T>::Zeros({b, this->config_.embedding_dim}));
      c.push_back(Tensor<T>::Zeros({b, this->config_.embedding_dim}));
    }
  }

  Tensor<T> Embedded(const Tensor<T> &table, const std::vector<int32_t> &ids, int64_t b,
                     int64_t width) const {
    return ag::Embedding(table, ids, {b, width});
  }

  Tensor<T> TimeSlice(const Tensor<T> &x, int64_t t) const {
    return ag::Reshape(ag::Slice(x, 1, t, 1), {x.dim(0), x.dim(2)});
  }

  // Advances every layer by one step. Where `keep` is 0 the previous state
  // is carried through unchanged.
  void Step(const std::vector<Cell<T>> &cells, Tensor<T> input, std::vector<Tensor<T>> &h,
            std::vector<Tensor<T>> &c, const Tensor<T> *keep, bool training, Rng *rng) const {
    const int64_t d = this->config_.embedding_dim;
    for (size_t l = 0; l < cells.size(); ++l) {
      const Cell<T> &cell = cells[l];
      Tensor<T> gates = ag::Add(ag::Add(ag::MatMul(input, cell.wx), ag::MatMul(h[l], cell.wh)), cell.b);
      Tensor<T> i = ag::Sigmoid(ag::Slice(gates, 1, 0, d));
      Tensor<T> f = ag::Sigmoid(ag::Slice(gates, 1, d, d));
      Tensor<T> g = ag::Tanh(ag::Slice(gates, 1, 2 * d, d));
      Tensor<T> o = ag::Sigmoid(ag::Slice(gates, 1, 3 * d, d));
      Tensor<T> c_new = ag::Add(ag::Mul(f, c[l]), ag::Mul(i, g));
      Tensor<T> h_new = ag::Mul(o, ag::Tanh(c_new));
      if (keep) {
        c_new = ag::Add(c[l], ag::Mul(*keep, ag::Sub(c_new, c[l])));
        h_new = ag::Add(h[l], ag::Mul(*keep, ag::Sub(h_new, h[l])));
      }
      c[l] = c_new;
      h[l] = h_new;
      input = MaybeDropout(h_new, this->config_.hidden_dropout, training, rng);
    }
  }

  Tensor<T> encoder_embed_, decoder_embed_, output_;
  std::vector<Cell<T>> encoder_, decoder_;
};

}  // namespace

template <typename T>
std::unique_ptr<Model<T>> MakeRecurrent(const ModelConfig &config, int32_t vocab_size,
                                        uint64_t seed) {
  return std::make_unique<Recurrent<T>>(config, vocab_size, seed);
}

template std::unique_ptr<Model<float>> MakeRecurrent(const ModelConfig &, int32_t, uint64_t);
template std::unique_ptr<Model<double>> MakeRecurrent(const ModelConfig &, int32_t, uint64_t);

}  // namespace mpe::internal
