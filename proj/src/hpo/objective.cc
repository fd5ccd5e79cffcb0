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

#include "mpe/hpo/objective.h"

#include <cmath>

#include "mpe/base/error.h"
#include "mpe/models/model.h"
#include "mpe/models/trainer.h"

namespace mpe {
namespace {

int AsInt(const ParamValue &v, const std::string &name) {
  const double d = AsNumber(v);
  if (d != std::floor(d)) throw Error(ErrorCode::kInvalidArgument, name + " must be an integer");
  return static_cast<int>(d);
}

bool AsBool(const ParamValue &v, const std::string &name) {
  const std::string s = AsString(v);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw Error(ErrorCode::kInvalidArgument, name + " must be true or false");
}

}  // namespace

void ApplyAssignment(const Assignment &assignment, ModelConfig &model, TrainConfig &train) {
  for (const auto &[name, v] : assignment) {
    if (name == "batch_size") {
      train.batch_size = AsInt(v, name);
    } else if (name == "learning_rate") {
      train.optimizer.learning_rate = AsNumber(v);
    } else if (name == "schedule") {
      train.optimizer.schedule = ag::ParseSchedule(AsString(v));
    } else if (name == "hidden_dropout") {
      model.hidden_dropout = AsNumber(v);
    } else if (name == "attention_dropout") {
      model.attention_dropout = AsNumber(v);
    } else if (name == "activation_dropout") {
      model.activation_dropout = AsNumber(v);
    } else if (name == "weight_decay") {
      train.optimizer.weight_decay = AsNumber(v);
    } else if (name == "encoder_layers") {
      model.encoder_layers = AsInt(v, name);
    } else if (name == "decoder_layers") {
      model.decoder_layers = AsInt(v, name);
    } else if (name == "embedding_dim") {
      model.embedding_dim = AsInt(v, name);
    } else if (name == "ffn_dim") {
      model.ffn_dim = AsInt(v, name);
    } else if (name == "attention_heads") {
      model.attention_heads = AsInt(v, name);
    } else if (name == "activation") {
      const std::string s = AsString(v);
      if (s == "relu") {
        model.activation = Activation::kRelu;
      } else if (s == "gelu") {
        model.activation = Activation::kGelu;
      } else {
        throw Error(ErrorCode::kInvalidArgument, "unknown activation '" + s + "'");
      }
    } else if (name == "learned_positions") {
      model.positional = AsBool(v, name) ? Positional::kLearned : Positional::kSinusoidal;
    } else if (name == "tie_all_embeddings") {
      model.tie_all_embeddings = AsBool(v, name);
    } else {
      throw Error(ErrorCode::kInvalidArgument, "no configuration field for parameter '" + name + "'");
    }
  }
  model.Validate();
  train.Validate();
}

Objective MakeTrainingObjective(const TrainingTask &task) {
  if (!task.vocab || !task.train || !task.validation) {
    throw Error(ErrorCode::kInvalidArgument, "training objective needs a vocabulary and both splits");
  }
  return [task](const Assignment &params, TrialReporter &reporter) {
    ModelConfig model_config = task.model;
    TrainConfig train_config = task.train_config;
    ApplyAssignment(params, model_config, train_config);
    auto model = CreateModel<float>(model_config, task.vocab->size(), task.model_seed);
    const TrainResult result =
        Train(*model, *task.vocab, *task.train, *task.validation, train_config,
              [&](const ValidationPoint &p) { return reporter.Report(p.step, p.mmp_f1); });
    return result.best_mmp_f1;
  };
}

}  // namespace mpe
