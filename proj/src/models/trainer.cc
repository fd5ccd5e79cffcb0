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

#include "mpe/models/trainer.h"

#include <json.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>

#include "mpe/base/digest.h"
#include "mpe/base/error.h"
#include "mpe/base/random.h"

namespace mpe {
namespace {

using nlohmann::json;

static_assert(kPadId == Vocabulary::kPad && kBosId == Vocabulary::kBos &&
              kEosId == Vocabulary::kEos && kFieldSepId == Vocabulary::kFieldSep);

constexpr size_t kUnbounded = static_cast<size_t>(-1);
// Batches are cut from pools of this many batches sorted by length.
constexpr size_t kPoolBatches = 8;

size_t ExampleLength(const EncodedExample &e) {
  return e.input.properties.size() + e.input.article.size() + e.target.size();
}

// One epoch of example indices: shuffled, sorted by length within pools so
// each batch pads little, then grouped into batches in shuffled order.
std::vector<size_t> EpochOrder(const std::vector<EncodedExample> &examples, size_t batch, Rng &rng) {
  std::vector<size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  rng.Shuffle(order.begin(), order.end());
  const size_t pool = batch * kPoolBatches;
  for (size_t start = 0; start < order.size(); start += pool) {
    const auto end = order.begin() + static_cast<ptrdiff_t>(std::min(order.size(), start + pool));
    std::stable_sort(order.begin() + static_cast<ptrdiff_t>(start), end, [&](size_t a, size_t b) {
      return ExampleLength(examples[a]) < ExampleLength(examples[b]);
    });
  }
  std::vector<size_t> starts;
  for (size_t start = 0; start < order.size(); start += batch) starts.push_back(start);
  rng.Shuffle(starts.begin(), starts.end());
  std::vector<size_t> grouped;
  grouped.reserve(order.size());
  for (size_t start : starts) {
    for (size_t i = start; i < std::min(order.size(), start + batch); ++i) grouped.push_back(order[i]);
  }
  return grouped;
}

std::vector<PropertyValuePair> DecodePairs(const Vocabulary &vocab, const std::vector<int32_t> &ids) {
  return ParsePairs(vocab.Decode(ids)).pairs;
}

ag::Checkpoint Snapshot(const Model<float> &model) {
  return ag::CaptureCheckpoint(model.parameters(), nullptr, "{}");
}

}  // namespace

std::vector<std::string> RequestedProperties(const MpeRecord &record) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto &p : record.pairs) {
    if (seen.insert(p.property).second) out.push_back(p.property);
  }
  return out;
}

ModelInput MakeModelInput(const Vocabulary &vocab, const std::vector<std::string> &properties,
                          const std::string &text, size_t max_source_len) {
  std::string joined;
  for (size_t i = 0; i < properties.size(); ++i) {
    if (i) {
      joined += ' ';
      joined += kPairSeparator;
      joined += ' ';
    }
    joined += properties[i];
  }
  return {vocab.Encode(joined, max_source_len), vocab.Encode(text, max_source_len)};
}

std::vector<EncodedExample> EncodeCorpus(const Corpus &corpus, const Vocabulary &vocab,
                                         const ModelConfig &config) {
  std::vector<EncodedExample> out;
  out.reserve(corpus.size());
  for (const auto &r : corpus) {
    EncodedExample e;
    e.article_id = r.article_id;
    const auto props = RequestedProperties(r);
    e.input = MakeModelInput(vocab, props, r.text, static_cast<size_t>(config.max_source_len));
    e.target = vocab.Encode(SerializePairs(r.pairs, PairOrder{props}), kUnbounded);
    e.expected = r.pairs;
    out.push_back(std::move(e));
  }
  return out;
}

std::string TrainingCurve::ToJsonLines() const {
  std::string out;
  for (const auto &p : points) {
    json j = {{"step", p.step}, {"train_loss", p.train_loss}, {"loss", p.loss}, {"mmp_f1", p.mmp_f1}};
    out += j.dump() + "\n";
  }
  return out;
}

ValidationScore Validate(Model<float> &model, const Vocabulary &vocab,
                         const std::vector<EncodedExample> &examples, int batch_size) {
  if (examples.empty()) throw Error(ErrorCode::kInvalidArgument, "empty validation sample");
  ag::NoGradGuard no_grad;
  ValidationScore score;
  double loss_sum = 0.0;
  std::vector<ScoredSets> scored;
  const size_t chunk = static_cast<size_t>(std::max(1, batch_size));
  for (size_t start = 0; start < examples.size(); start += chunk) {
    const size_t n = std::min(chunk, examples.size() - start);
    std::vector<ModelInput> inputs;
    std::vector<std::vector<int32_t>> targets;
    for (size_t i = start; i < start + n; ++i) {
      inputs.push_back(examples[i].input);
      targets.push_back(examples[i].target);
    }
    loss_sum += model.Loss(inputs, targets, false, nullptr).item() * static_cast<double>(n);
    DecodeOptions options;
    options.beam_size = 1;
    options.max_len = model.config().max_target_len;
    options.batch_size = static_cast<int>(n);
    const auto generated = Generate(model, std::span<const ModelInput>(inputs), options);
    for (size_t i = 0; i < n; ++i) {
      scored.push_back({MakeAnswerSet(examples[start + i].expected),
                        MakeAnswerSet(DecodePairs(vocab, generated[i]))});
    }
  }
  score.loss = loss_sum / static_cast<double>(examples.size());
  score.mmp_f1 = MmpF1(scored);
  return score;
}

TrainResult Train(Model<float> &model, const Vocabulary &vocab, const Corpus &train,
                  const Corpus &validation, const TrainConfig &config,
                  const ValidationCallback &on_validation) {
  config.Validate();
  if (train.empty()) throw Error(ErrorCode::kInvalidArgument, "training split is empty");
  if (validation.empty()) throw Error(ErrorCode::kInvalidArgument, "validation split is empty");
  if (model.vocab_size() != vocab.size()) {
    throw Error(ErrorCode::kFailedPrecondition,
                "model expects " + std::to_string(model.vocab_size()) + " ids but the vocabulary has " +
                    std::to_string(vocab.size()));
  }
  const auto start_time = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
  };

  const std::vector<EncodedExample> train_examples = EncodeCorpus(train, vocab, model.config());
  std::vector<EncodedExample> val_examples = EncodeCorpus(validation, vocab, model.config());
  Rng rng(config.seed);
  Rng dropout_rng = rng.Fork();
  if (config.validation_sample > 0 && val_examples.size() > config.validation_sample) {
    Rng sample_rng = rng.Fork();
    sample_rng.Shuffle(val_examples.begin(), val_examples.end());
    val_examples.resize(config.validation_sample);
  }
  std::stable_sort(val_examples.begin(), val_examples.end(),
                   [](const EncodedExample &a, const EncodedExample &b) {
                     return ExampleLength(a) < ExampleLength(b);
                   });

  ag::OptimizerConfig opt_config = config.optimizer;
  if (opt_config.schedule == ag::Schedule::kLinear && opt_config.total_steps == 0) {
    opt_config.total_steps = config.max_steps;
  }
  ag::AdamW<float> optimizer(model.parameters(), opt_config);

  TrainResult result;
  const int batch = std::min<int>(config.batch_size, static_cast<int>(train_examples.size()));
  std::vector<size_t> order;
  size_t cursor = 0;
  double interval_loss = 0.0;
  int64_t interval_steps = 0;
  int bad_validations = 0;
  bool have_best = false;

  for (int64_t step = 1; step <= config.max_steps; ++step) {
    std::vector<ModelInput> inputs;
    std::vector<std::vector<int32_t>> targets;
    for (int i = 0; i < batch; ++i) {
      if (cursor == order.size()) {
        order = EpochOrder(train_examples, static_cast<size_t>(batch), rng);
        cursor = 0;
      }
      const auto &e = train_examples[order[cursor++]];
      inputs.push_back(e.input);
      targets.push_back(e.target);
    }
    ag::Tensor<float> loss = model.Loss(inputs, targets, true, &dropout_rng);
    const double value = loss.item();
    if (!std::isfinite(value)) {
      throw Error(ErrorCode::kNumeric, "training loss became " + std::to_string(value) +
                                           " at step " + std::to_string(step));
    }
    ag::Backward(loss);
    optimizer.Step();
    optimizer.ZeroGrad();
    interval_loss += value;
    ++interval_steps;
    result.steps = step;

    if (step % config.validate_every != 0 && step != config.max_steps) continue;
    const ValidationScore score = Validate(model, vocab, val_examples, config.batch_size);
    ValidationPoint point{step, interval_loss / static_cast<double>(interval_steps), score.loss,
                          score.mmp_f1, elapsed()};
    interval_loss = 0.0;
    interval_steps = 0;
    result.curve.points.push_back(point);
    if (!have_best || point.mmp_f1 > result.best_mmp_f1) {
      have_best = true;
      result.best_mmp_f1 = point.mmp_f1;
      result.best_step = step;
      result.best = Snapshot(model);
      bad_validations = 0;
    } else {
      ++bad_validations;
    }
    if (on_validation && on_validation(point)) {
      result.stop_reason = "pruned";
      break;
    }
    if (bad_validations >= config.patience) {
      result.stop_reason = "patience";
      break;
    }
    if (config.target_mmp_f1 > 0.0 && point.mmp_f1 >= config.target_mmp_f1) {
      result.stop_reason = "target";
      break;
    }
    if (config.time_budget_seconds > 0.0 && point.wall_seconds >= config.time_budget_seconds) {
      result.stop_reason = "time_budget";
      break;
    }
  }
  if (result.stop_reason.empty()) result.stop_reason = "max_steps";
  ag::RestoreParameters(result.best, model.parameters());
  result.best = MakeModelCheckpoint(model, vocab,
                                    json{{"best_step", result.best_step},
                                         {"best_mmp_f1", result.best_mmp_f1},
                                         {"steps", result.steps},
                                         {"stop_reason", result.stop_reason}}
                                        .dump());
  return result;
}

PredictionMap Predict(Model<float> &model, const Vocabulary &vocab, const Corpus &split,
                      const DecodeOptions &options) {
  const auto examples = EncodeCorpus(split, vocab, model.config());
  std::vector<ModelInput> inputs;
  for (const auto &e : examples) inputs.push_back(e.input);
  const auto generated = Generate(model, std::span<const ModelInput>(inputs), options);
  PredictionMap out;
  for (size_t i = 0; i < examples.size(); ++i) {
    out[examples[i].article_id] = DecodePairs(vocab, generated[i]);
  }
  return out;
}

MetricReport EvaluateModel(Model<float> &model, const Vocabulary &vocab, const Corpus &split,
                           int beam_size, const DiagnosticLabels &labels) {
  DecodeOptions options;
  options.beam_size = beam_size;
  options.max_len = model.config().max_target_len;
  return BuildReport(split, Predict(model, vocab, split, options), labels);
}

ag::Checkpoint MakeModelCheckpoint(const Model<float> &model, const Vocabulary &vocab,
                                   const std::string &extra_json) {
  json meta = {{"model", json::parse(model.config().ToJson())},
               {"vocab_size", vocab.size()},
               {"vocab_sha256", Sha256Hex(vocab.ToText())},
               {"extra", json::parse(extra_json)}};
  return ag::CaptureCheckpoint(model.parameters(), nullptr, meta.dump());
}

void SaveModel(const std::filesystem::path &path, const Model<float> &model,
               const Vocabulary &vocab, const std::string &extra_json) {
  ag::WriteCheckpoint(path.string(), MakeModelCheckpoint(model, vocab, extra_json));
}

std::unique_ptr<Model<float>> ModelFromCheckpoint(const ag::Checkpoint &checkpoint,
                                                  const Vocabulary &vocab) {
  json meta;
  try {
    meta = json::parse(checkpoint.metadata);
  } catch (const json::exception &e) {
    throw Error(ErrorCode::kParse, std::string("checkpoint metadata: ") + e.what());
  }
  if (!meta.contains("model") || !meta.contains("vocab_sha256")) {
    throw Error(ErrorCode::kParse, "checkpoint metadata lacks the model description");
  }
  if (meta["vocab_sha256"].get<std::string>() != Sha256Hex(vocab.ToText())) {
    throw Error(ErrorCode::kFailedPrecondition,
                "vocabulary does not match the one the checkpoint was trained with");
  }
  const ModelConfig config = ModelConfig::FromJson(meta["model"].dump());
  auto model = CreateModel<float>(config, vocab.size(), 0);
  ag::RestoreParameters(checkpoint, model->parameters());
  return model;
}

std::unique_ptr<Model<float>> LoadModel(const std::filesystem::path &path, const Vocabulary &vocab) {
  return ModelFromCheckpoint(ag::ReadCheckpoint(path.string()), vocab);
}

}  // namespace mpe
