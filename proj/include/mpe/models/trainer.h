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

// Data preparation, training with validation-based early stopping, and
// evaluation.

#ifndef MPE_MODELS_TRAINER_H_
#define MPE_MODELS_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mpe/autograd/checkpoint.h"
#include "mpe/corpus/record.h"
#include "mpe/diagnostics/diagnostics.h"
#include "mpe/metrics/metrics.h"
#include "mpe/models/config.h"
#include "mpe/models/decode.h"
#include "mpe/models/model.h"
#include "mpe/tokenizer/tokenizer.h"

namespace mpe {

// Distinct properties of a record in first-occurrence order.
std::vector<std::string> RequestedProperties(const MpeRecord &record);

// Property names joined by the pair separator, then encoded.
ModelInput MakeModelInput(const Vocabulary &vocab, const std::vector<std::string> &properties,
                          const std::string &text, size_t max_source_len);

struct EncodedExample {
  std::string article_id;
  ModelInput input;
  // Serialized pairs in requested-property order.
  std::vector<int32_t> target;
  std::vector<PropertyValuePair> expected;
};

std::vector<EncodedExample> EncodeCorpus(const Corpus &corpus, const Vocabulary &vocab,
                                         const ModelConfig &config);

struct ValidationPoint {
  int64_t step = 0;
  // Mean training loss since the previous validation.
  double train_loss = 0.0;
  double loss = 0.0;
  double mmp_f1 = 0.0;
  double wall_seconds = 0.0;
};

struct TrainingCurve {
  std::vector<ValidationPoint> points;

  // One JSON object per validation: step, train_loss, loss, mmp_f1. Wall
  // time is left out so the file is reproducible.
  std::string ToJsonLines() const;
};

struct TrainResult {
  // Parameters at the best validation.
  ag::Checkpoint best;
  TrainingCurve curve;
  int64_t steps = 0;
  int64_t best_step = 0;
  double best_mmp_f1 = 0.0;
  // "patience", "max_steps", "target", "time_budget" or "pruned".
  std::string stop_reason;
};

// Called after each validation; returning true stops training as pruned.
using ValidationCallback = std::function<bool(const ValidationPoint &)>;

// Validation loss and greedy-decoding MMP-F1 over `examples`.
struct ValidationScore {
  double loss = 0.0;
  double mmp_f1 = 0.0;
};
ValidationScore Validate(Model<float> &model, const Vocabulary &vocab,
                         const std::vector<EncodedExample> &examples, int batch_size);

// Trains `model` in place and leaves it holding the best-validation
// parameters. Throws kInvalidArgument on an empty split and kNumeric when
// the loss diverges.
TrainResult Train(Model<float> &model, const Vocabulary &vocab, const Corpus &train,
                  const Corpus &validation, const TrainConfig &config,
                  const ValidationCallback &on_validation = {});

// Generated pairs for every record of `split`.
PredictionMap Predict(Model<float> &model, const Vocabulary &vocab, const Corpus &split,
                      const DecodeOptions &options);

MetricReport EvaluateModel(Model<float> &model, const Vocabulary &vocab, const Corpus &split,
                           int beam_size, const DiagnosticLabels &labels);

// Checkpoint metadata records the model config and the vocabulary digest.
void SaveModel(const std::filesystem::path &path, const Model<float> &model,
               const Vocabulary &vocab, const std::string &extra_json = "{}");
ag::Checkpoint MakeModelCheckpoint(const Model<float> &model, const Vocabulary &vocab,
                                   const std::string &extra_json = "{}");
// Throws kFailedPrecondition when the vocabulary differs from the one the
// checkpoint was trained with.
std::unique_ptr<Model<float>> LoadModel(const std::filesystem::path &path, const Vocabulary &vocab);
std::unique_ptr<Model<float>> ModelFromCheckpoint(const ag::Checkpoint &checkpoint,
                                                  const Vocabulary &vocab);

}  // namespace mpe

#endif  // MPE_MODELS_TRAINER_H_
