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

// Study objectives that train a model per trial.

#ifndef MPE_HPO_OBJECTIVE_H_
#define MPE_HPO_OBJECTIVE_H_

#include <cstdint>

#include "mpe/corpus/record.h"
#include "mpe/hpo/study.h"
#include "mpe/models/config.h"
#include "mpe/tokenizer/tokenizer.h"

namespace mpe {

// Overrides fields named by the assignment: batch_size, learning_rate,
// schedule, hidden_dropout, attention_dropout, activation_dropout,
// weight_decay, encoder_layers, decoder_layers, embedding_dim, ffn_dim,
// attention_heads, activation, learned_positions, tie_all_embeddings.
// Throws kInvalidArgument on any other name or a value the configs reject.
void ApplyAssignment(const Assignment &assignment, ModelConfig &model, TrainConfig &train);

struct TrainingTask {
  const Vocabulary *vocab = nullptr;
  const Corpus *train = nullptr;
  const Corpus *validation = nullptr;
  ModelConfig model;
  TrainConfig train_config;
  uint64_t model_seed = 1;
};

// Trains one model per trial and returns its best validation MMP-F1. Every
// validation is reported to the study, so the pruner can stop the run.
Objective MakeTrainingObjective(const TrainingTask &task);

}  // namespace mpe

#endif  // MPE_HPO_OBJECTIVE_H_
