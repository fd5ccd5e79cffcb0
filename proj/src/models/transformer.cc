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
struct EncoderLayer {
  Norm<T> attn_norm, ffn_norm;
  Attention<T> attn;
  FeedForward<T> ffn;
};

template <typename T>
struct DecoderLayer {
  Norm<T> self_norm, ffn_norm;
  Attention<T> self_attn;
  // One block per source, applied in memory order.
  std::vector<Norm<T>> cross_norms;
  std::vector<Attention<T>> cross_attns;
  FeedForward<T> ffn;
};

// Pre-LN encoder-decoder transformer. With two sources the encoder stack is
// applied to each with the same parameters and every decoder layer attends
// to both encodings through separate cross-attention blocks.
template <typename T>
class Transformer : public Model<T> {
 public:
  Transformer(const ModelConfig &config, int32_t vocab_size, uint64_t seed)
      : Model<T>(config, vocab_size) {
    Rng rng(seed);
    ParamFn<T> param = [&](const std::string &name, ag::Shape shape, double stddev, double fill) {
      return this->AddParameter(name, std::move(shape), stddev, rng, fill);
    };
    const int64_t d = config.embedding_dim, v = vocab_size;
    const double embed_std = 1.0 / std::sqrt(static_cast<double>(d));
    dual_ = config.architecture == Architecture::kDualSource;
    if (config.tie_all_embeddings) {
      encoder_embed_ = decoder_embed_ = output_ = param("embedding", {v, d}, embed_std, 0);
    } else {
      encoder_embed_ = param("encoder.embedding", {v, d}, embed_std, 0);
      decoder_embed_ = param("decoder.embedding", {v, d}, embed_std, 0);
      output_ = param("output.weight", {v, d}, embed_std, 0);
    }
    if (config.positional == Positional::kLearned) {
      encoder_pos_ = param("encoder.positions", {config.max_positions, d}, 0.02, 0);
      decoder_pos_ = param("decoder.positions", {config.max_positions, d}, 0.02, 0);
    }
    for (int i = 0; i < config.encoder_layers; ++i) {
      const std::string p = "encoder.layers." + std::to_string(i);
      encoder_.push_back({Norm<T>(param, p + ".attn_norm", d), Norm<T>(param, p + ".ffn_norm", d),
                          Attention<T>(param, p + ".self_attn", d, config.attention_heads),
                          FeedForward<T>(param, p + ".ffn", d, config.ffn_dim, config.activation)});
    }
    encoder_norm_ = Norm<T>(param, "encoder.final_norm", d);
    std::vector<std::string> sources;
    if (!dual_) {
      sources = {"source"};
    } else if (config.cross_attention_order == CrossAttentionOrder::kPropertiesThenArticle) {
      sources = {"properties", "article"};
    } else {
      sources = {"article", "properties"};
    }
    for (const auto &s : sources) memory_order_.push_back(s == "article" ? 1 : 0);
    for (int i = 0; i < config.decoder_layers; ++i) {
      const std::string p = "decoder.layers." + std::to_string(i);
      DecoderLayer<T> layer;
      layer.self_norm = Norm<T>(param, p + ".self_norm", d);
      layer.self_attn = Attention<T>(param, p + ".self_attn", d, config.attention_heads);
      for (const auto &s : sources) {
        layer.cross_norms.emplace_back(param, p + ".cross_norm_" + s, d);
        layer.cross_attns.emplace_back(param, p + ".cross_attn_" + s, d, config.attention_heads);
      }
      layer.ffn_norm = Norm<T>(param, p + ".ffn_norm", d);
      layer.ffn = FeedForward<T>(param, p + ".ffn", d, config.ffn_dim, config.activation);
      decoder_.push_back(std::move(layer));
    }
    decoder_norm_ = Norm<T>(param, "decoder.final_norm", d);
  }

  EncoderMemory<T> Encode(std::span<const ModelInput> inputs, bool training, Rng *rng) override {
    const size_t max_len = static_cast<size_t>(this->config_.max_source_len);
    std::vector<std::vector<std::vector<int32_t>>> sources;
    if (dual_) {
      sources.resize(2);
      for (const auto &in : inputs) {
        sources[0].push_back(Cut(in.properties, max_len));
        sources[1].push_back(Cut(in.article, max_len));
      }
    } else {
      sources.resize(1);
      for (const auto &in : inputs) sources[0].push_back(ConcatenatedSource(in, max_len));
    }
    EncoderMemory<T> memory;
    memory.batch = static_cast<int64_t>(inputs.size());
    for (const auto &rows : sources) {
      int64_t width = 0;
      std::vector<int32_t> ids = PadIds(rows, kPadId, &width);
      ag::Mask mask = KeyPaddingMask(rows, width);
      Tensor<T> x = Embed(encoder_embed_, encoder_pos_, ids, memory.batch, width, training, rng);
      for (const auto &layer : encoder_) {
        Tensor<T> n = layer.attn_norm(x);
        Tensor<T> h =
            layer.attn(n, n, &mask, nullptr, this->config_.attention_dropout, training, rng);
        x = ag::Add(x, MaybeDropout(h, this->config_.hidden_dropout, training, rng));
        h = layer.ffn(layer.ffn_norm(x), this->config_.activation_dropout, training, rng);
        x = ag::Add(x, MaybeDropout(h, this->config_.hidden_dropout, training, rng));
      }
      memory.states.push_back(encoder_norm_(x));
      memory.masks.push_back(std::move(mask));
    }
    // Cross-attention keys and values, layer-major then block order.
    for (const auto &layer : decoder_) {
      for (size_t s = 0; s < layer.cross_attns.size(); ++s) {
        auto kv = layer.cross_attns[s].Project(memory.states[memory_order_[s]]);
        memory.cache.push_back(std::move(kv.keys));
        memory.cache.push_back(std::move(kv.values));
      }
    }
    return memory;
  }

  Tensor<T> Decode(const EncoderMemory<T> &memory,
                   const std::vector<std::vector<int32_t>> &decoder_inputs, bool training, Rng *rng,
                   bool last_only) override {
    if (static_cast<int64_t>(decoder_inputs.size()) != memory.batch) {
      throw Error(ErrorCode::kInvalidArgument, "decoder batch does not match the encoder memory");
    }
    int64_t width = 0;
    std::vector<int32_t> ids = PadIds(decoder_inputs, kPadId, &width);
    for (int32_t id : ids) {
      if (id < 0 || id >= this->vocab_size_) {
        throw Error(ErrorCode::kInvalidArgument, "token id " + std::to_string(id) +
                                                     " outside the model vocabulary");
      }
    }
    const ag::Mask causal = CausalMask(width);
    Tensor<T> x = Embed(decoder_embed_, decoder_pos_, ids, memory.batch, width, training, rng);
    const ModelConfig &c = this->config_;
    if (memory.cache.size() != 2 * decoder_.size() * memory_order_.size()) {
      throw Error(ErrorCode::kInvalidArgument, "encoder memory was not produced by this model");
    }
    size_t cached = 0;
    for (const auto &layer : decoder_) {
      Tensor<T> n = layer.self_norm(x);
      Tensor<T> h = layer.self_attn(n, n, nullptr, &causal, c.attention_dropout, training, rng);
      x = ag::Add(x, MaybeDropout(h, c.hidden_dropout, training, rng));
      for (size_t s = 0; s < layer.cross_attns.size(); ++s) {
        const size_t m = memory_order_[s];
        const typename Attention<T>::KeyValue kv{memory.cache[cached], memory.cache[cached + 1]};
        cached += 2;
        h = layer.cross_attns[s].Attend(layer.cross_norms[s](x), kv, &memory.masks[m], nullptr,
                                        c.attention_dropout, training, rng);
        x = ag::Add(x, MaybeDropout(h, c.hidden_dropout, training, rng));
      }
      h = layer.ffn(layer.ffn_norm(x), c.activation_dropout, training, rng);
      x = ag::Add(x, MaybeDropout(h, c.hidden_dropout, training, rng));
    }
    if (last_only) x = ag::Slice(x, 1, width - 1, 1);
    return ag::MatMul(decoder_norm_(x), output_, true);
  }

 private:
  static std::vector<int32_t> Cut(const std::vector<int32_t> &ids, size_t max_len) {
    if (ids.empty()) return {kEosId};
    if (ids.size() <= max_len) return ids;
    return {ids.begin(), ids.begin() + static_cast<ptrdiff_t>(max_len)};
  }

  Tensor<T> Embed(const Tensor<T> &table, const Tensor<T> &learned, const std::vector<int32_t> &ids,
                  int64_t batch, int64_t width, bool training, Rng *rng) const {
    const int64_t d = this->config_.embedding_dim;
    Tensor<T> x = ag::Scale(ag::Embedding(table, ids, {batch, width}),
                            static_cast<T>(std::sqrt(static_cast<double>(d))));
    switch (this->config_.positional) {
      case Positional::kSinusoidal:
        x = ag::Add(x, SinusoidTable<T>(width, d));
        break;
      case Positional::kLearned:
        if (width > learned.dim(0)) {
          throw Error(ErrorCode::kInvalidArgument,
                      "sequence of " + std::to_string(width) + " exceeds the position table");
        }
        x = ag::Add(x, ag::Slice(learned, 0, 0, width));
        break;
      case Positional::kNone:
        break;
    }
    return MaybeDropout(x, this->config_.hidden_dropout, training, rng);
  }

  bool dual_ = false;
  Tensor<T> encoder_embed_, decoder_embed_, output_, encoder_pos_, decoder_pos_;
  std::vector<EncoderLayer<T>> encoder_;
  Norm<T> encoder_norm_;
  std::vector<DecoderLayer<T>> decoder_;
  Norm<T> decoder_norm_;
  // Memory index read by each cross-attention block.
  std::vector<size_t> memory_order_;
};

}  // namespace

template <typename T>
std::unique_ptr<Model<T>> MakeTransformer(const ModelConfig &config, int32_t vocab_size,
                                          uint64_t seed) {
  return std::make_unique<Transformer<T>>(config, vocab_size, seed);
}

template std::unique_ptr<Model<float>> MakeTransformer(const ModelConfig &, int32_t, uint64_t);
template std::unique_ptr<Model<double>> MakeTransformer(const ModelConfig &, int32_t, uint64_t);

}  // namespace mpe::internal
