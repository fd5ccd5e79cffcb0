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

#include "mpe/models/config.h"

#include <json.hpp>
#include <set>

#include "mpe/base/error.h"

namespace mpe {
namespace {

using nlohmann::json;

[[noreturn]] void Invalid(const std::string &msg) { throw Error(ErrorCode::kInvalidArgument, msg); }

template <typename E>
struct EnumNames {
  std::vector<std::pair<E, const char *>> items;
  const char *Name(E e) const {
    for (const auto &[v, n] : items) {
      if (v == e) return n;
    }
    return "?";
  }
  E Parse(const std::string &s, const char *what) const {
    for (const auto &[v, n] : items) {
      if (s == n) return v;
    }
    Invalid(std::string("unknown ") + what + " '" + s + "'");
  }
};

const EnumNames<Architecture> kArchitectures{{{Architecture::kSeq2Seq, "seq2seq"},
                                              {Architecture::kTransformer, "transformer"},
                                              {Architecture::kDualSource, "dual_source"}}};
const EnumNames<Activation> kActivations{{{Activation::kRelu, "relu"}, {Activation::kGelu, "gelu"}}};
const EnumNames<Positional> kPositionals{{{Positional::kSinusoidal, "sinusoidal"},
                                          {Positional::kLearned, "learned"},
                                          {Positional::kNone, "none"}}};
const EnumNames<CrossAttentionOrder> kOrders{
    {{CrossAttentionOrder::kPropertiesThenArticle, "properties_then_article"},
     {CrossAttentionOrder::kArticleThenProperties, "article_then_properties"}}};

json Parse(const std::string &text, const char *what) {
  try {
    json j = json::parse(text);
    if (!j.is_object()) Invalid(std::string(what) + " must be a JSON object");
    return j;
  } catch (const json::parse_error &e) {
    throw Error(ErrorCode::kParse, std::string(what) + ": " + e.what());
  }
}

void RejectUnknown(const json &j, const std::set<std::string> &known, const char *what) {
  for (const auto &[key, _] : j.items()) {
    if (!known.count(key)) Invalid(std::string("unknown ") + what + " key '" + key + "'");
  }
}

template <typename V>
void Read(const json &j, const char *key, V &out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<V>();
  } catch (const json::exception &) {
    Invalid(std::string("bad value for '") + key + "'");
  }
}

template <typename E>
void ReadEnum(const json &j, const char *key, const EnumNames<E> &names, E &out) {
  std::string s;
  if (!j.contains(key)) return;
  Read(j, key, s);
  out = names.Parse(s, key);
}

}  // namespace

const char *ArchitectureName(Architecture a) { return kArchitectures.Name(a); }
Architecture ParseArchitecture(const std::string &name) {
  return kArchitectures.Parse(name, "architecture");
}

void ModelConfig::Validate() const {
  if (encoder_layers < 1 || decoder_layers < 1) Invalid("layer counts must be at least 1");
  if (embedding_dim < 1 || ffn_dim < 1 || attention_heads < 1) {
    Invalid("widths and head count must be positive");
  }
  if (architecture != Architecture::kSeq2Seq && embedding_dim % attention_heads != 0) {
    Invalid("embedding_dim " + std::to_string(embedding_dim) + " is not divisible by " +
            std::to_string(attention_heads) + " attention heads");
  }
  for (double p : {hidden_dropout, attention_dropout, activation_dropout}) {
    if (!(p >= 0.0 && p < 1.0)) Invalid("dropout rates must lie in [0, 1)");
  }
  if (max_source_len < 1 || max_target_len < 1) Invalid("length limits must be positive");
  if (positional == Positional::kLearned && max_positions < std::max(max_source_len, max_target_len + 1)) {
    Invalid("max_positions must cover max_source_len and max_target_len + 1");
  }
}

std::string ModelConfig::ToJson() const {
  json j = {{"architecture", kArchitectures.Name(architecture)},
            {"encoder_layers", encoder_layers},
            {"decoder_layers", decoder_layers},
            {"embedding_dim", embedding_dim},
            {"ffn_dim", ffn_dim},
            {"attention_heads", attention_heads},
            {"activation", kActivations.Name(activation)},
            {"positional", kPositionals.Name(positional)},
            {"hidden_dropout", hidden_dropout},
            {"attention_dropout", attention_dropout},
            {"activation_dropout", activation_dropout},
            {"tie_all_embeddings", tie_all_embeddings},
            {"max_source_len", max_source_len},
            {"max_target_len", max_target_len},
            {"max_positions", max_positions},
            {"cross_attention_order", kOrders.Name(cross_attention_order)}};
  return j.dump();
}

ModelConfig ModelConfig::FromJson(const std::string &text) {
  const json j = Parse(text, "model config");
  RejectUnknown(j,
                {"architecture", "encoder_layers", "decoder_layers", "embedding_dim", "ffn_dim",
                 "attention_heads", "activation", "positional", "hidden_dropout",
                 "attention_dropout", "activation_dropout", "tie_all_embeddings", "max_source_len",
                 "max_target_len", "max_positions", "cross_attention_order"},
                "model config");
  ModelConfig c;
  ReadEnum(j, "architecture", kArchitectures, c.architecture);
  Read(j, "encoder_layers", c.encoder_layers);
  Read(j, "decoder_layers", c.decoder_layers);
  Read(j, "embedding_dim", c.embedding_dim);
  Read(j, "ffn_dim", c.ffn_dim);
  Read(j, "attention_heads", c.attention_heads);
  ReadEnum(j, "activation", kActivations, c.activation);
  ReadEnum(j, "positional", kPositionals, c.positional);
  Read(j, "hidden_dropout", c.hidden_dropout);
  Read(j, "attention_dropout", c.attention_dropout);
  Read(j, "activation_dropout", c.activation_dropout);
  Read(j, "tie_all_embeddings", c.tie_all_embeddings);
  Read(j, "max_source_len", c.max_source_len);
  Read(j, "max_target_len", c.max_target_len);
  Read(j, "max_positions", c.max_positions);
  ReadEnum(j, "cross_attention_order", kOrders, c.cross_attention_order);
  c.Validate();
  return c;
}

ag::OptimizerConfig TrainConfig::DefaultOptimizer() {
  ag::OptimizerConfig o;
  o.learning_rate = 5e-4;
  o.schedule = ag::Schedule::kConstant;
  return o;
}

void TrainConfig::Validate() const {
  if (batch_size < 1) Invalid("batch_size must be at least 1");
  if (validate_every < 1) Invalid("validate_every must be at least 1");
  if (patience < 1) Invalid("patience must be at least 1");
  if (max_steps < 1) Invalid("max_steps must be at least 1");
  if (beam_size < 1) Invalid("beam_size must be at least 1");
  ag::OptimizerConfig o = optimizer;
  if (o.schedule == ag::Schedule::kLinear && o.total_steps == 0) o.total_steps = max_steps;
  o.Validate();
}

std::string TrainConfig::ToJson() const {
  json j = {{"batch_size", batch_size},
            {"learning_rate", optimizer.learning_rate},
            {"schedule", ag::ScheduleName(optimizer.schedule)},
            {"warmup_steps", optimizer.warmup_steps},
            {"weight_decay", optimizer.weight_decay},
            {"clip_norm", optimizer.clip_norm},
            {"validate_every", validate_every},
            {"patience", patience},
            {"max_steps", max_steps},
            {"seed", seed},
            {"beam_size", beam_size},
            {"validation_sample", validation_sample},
            {"target_mmp_f1", target_mmp_f1},
            {"time_budget_seconds", time_budget_seconds}};
  return j.dump();
}

TrainConfig TrainConfig::FromJson(const std::string &text) {
  const json j = Parse(text, "train config");
  RejectUnknown(j,
                {"batch_size", "learning_rate", "schedule", "warmup_steps", "weight_decay",
                 "clip_norm", "validate_every", "patience", "max_steps", "seed", "beam_size",
                 "validation_sample", "target_mmp_f1", "time_budget_seconds"},
                "train config");
  TrainConfig c;
  Read(j, "batch_size", c.batch_size);
  Read(j, "learning_rate", c.optimizer.learning_rate);
  if (j.contains("schedule")) {
    std::string s;
    Read(j, "schedule", s);
    c.optimizer.schedule = ag::ParseSchedule(s);
  }
  Read(j, "warmup_steps", c.optimizer.warmup_steps);
  Read(j, "weight_decay", c.optimizer.weight_decay);
  Read(j, "clip_norm", c.optimizer.clip_norm);
  Read(j, "validate_every", c.validate_every);
  Read(j, "patience", c.patience);
  Read(j, "max_steps", c.max_steps);
  Read(j, "seed", c.seed);
  Read(j, "beam_size", c.beam_size);
  Read(j, "validation_sample", c.validation_sample);
  Read(j, "target_mmp_f1", c.target_mmp_f1);
  Read(j, "time_budget_seconds", c.time_budget_seconds);
  c.Validate();
  return c;
}

}  // namespace mpe
