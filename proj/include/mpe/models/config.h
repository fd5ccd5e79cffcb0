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

// Model and training configuration.

#ifndef MPE_MODELS_CONFIG_H_
#define MPE_MODELS_CONFIG_H_

#include <cstdint>
#include <string>

#include "mpe/autograd/optim.h"

namespace mpe {

enum class Architecture { kSeq2Seq, kTransformer, kDualSource };
enum class Activation { kRelu, kGelu };
enum class Positional { kSinusoidal, kLearned, kNone };
enum class CrossAttentionOrder { kPropertiesThenArticle, kArticleThenProperties };

const char *ArchitectureName(Architecture a);
Architecture ParseArchitecture(const std::string &name);

// Desk-scale defaults: 2 + 2 layers, width 64, FFN 128, 4 heads.
struct ModelConfig {
  Architecture architecture = Architecture::kDualSource;
  int encoder_layers = 2;
  int decoder_layers = 2;
  int embedding_dim = 64;
  int ffn_dim = 128;
  int attention_heads = 4;
  Activation activation = Activation::kRelu;
  Positional positional = Positional::kSinusoidal;
  double hidden_dropout = 0.0;
  double attention_dropout = 0.0;
  double activation_dropout = 0.0;
  // Input embeddings of every source and the decoder, plus the output
  // projection, are one tensor.
  bool tie_all_embeddings = true;
  int max_source_len = 512;
  int max_target_len = 128;
  // Longest learned position table; sinusoids have no limit.
  int max_positions = 1024;
  CrossAttentionOrder cross_attention_order = CrossAttentionOrder::kPropertiesThenArticle;

  // Throws kInvalidArgument on inconsistent settings.
  void Validate() const;
  std::string ToJson() const;
  static ModelConfig FromJson(const std::string &json);
};

struct TrainConfig {
  int batch_size = 32;
  ag::OptimizerConfig optimizer = DefaultOptimizer();
  int64_t validate_every = 200;
  // Consecutive non-improving validations tolerated before stopping.
  int patience = 3;
  int64_t max_steps = 3000;
  uint64_t seed = 1;
  int beam_size = 8;
  // Articles of the validation split scored at each validation; 0 = all.
  size_t validation_sample = 200;
  // Stop as soon as validation MMP-F1 reaches this value; <= 0 disables.
  double target_mmp_f1 = 0.0;
  // Wall-clock budget in seconds; <= 0 disables.
  double time_budget_seconds = 0.0;

  static ag::OptimizerConfig DefaultOptimizer();
  void Validate() const;
  std::string ToJson() const;
  static TrainConfig FromJson(const std::string &json);
};

}  // namespace mpe

#endif  // MPE_MODELS_CONFIG_H_
