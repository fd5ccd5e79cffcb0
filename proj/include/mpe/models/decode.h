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

// Autoregressive decoding: greedy search and length-normalized beam search.

#ifndef MPE_MODELS_DECODE_H_
#define MPE_MODELS_DECODE_H_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mpe/models/model.h"

namespace mpe {

// Next-token log-probabilities for each prefix (BOS included), one row of
// vocabulary size per prefix. All prefixes of a call have equal length.
using StepFunction =
    std::function<std::vector<std::vector<double>>(const std::vector<std::vector<int32_t>> &)>;

struct Hypothesis {
  // Generated tokens without BOS and EOS.
  std::vector<int32_t> tokens;
  // Sum of token log-probabilities, EOS included when emitted.
  double log_prob = 0.0;
  // log_prob divided by the number of scored tokens.
  double score = 0.0;
  bool finished = false;
};

// Takes the most probable token until EOS or max_len tokens. Ties go to
// the lower token id. PAD and BOS are never produced.
Hypothesis GreedySearch(const StepFunction &step, int max_len);

// Keeps the `width` best partial sequences by summed log-probability (ties
// by lower token id, then lower parent rank); a candidate ending in EOS is
// set aside as finished. Stops once `width` sequences finished and no
// partial sequence has a higher summed log-probability than the best
// finished one, when no partial sequence is left, or after max_len tokens;
// unfinished survivors then join the finished pool. Returns the pool member with the highest
// length-normalized score, or the highest summed log-probability when
// length_normalize is false. Width 1 reproduces GreedySearch. Throws when
// width < 1.
Hypothesis BeamSearch(const StepFunction &step, int width, int max_len,
                      bool length_normalize = true);

// Log-softmax of one logit row in double precision.
std::vector<double> LogSoftmax(std::span<const float> logits);
std::vector<double> LogSoftmax(std::span<const double> logits);

struct DecodeOptions {
  int beam_size = 1;
  int max_len = 128;
  // Examples encoded together.
  int batch_size = 32;
};

// Generated token sequences, one per input. Beam width 1 runs batched
// greedy search.
template <typename T>
std::vector<std::vector<int32_t>> Generate(Model<T> &model, std::span<const ModelInput> inputs,
                                           const DecodeOptions &options);

}  // namespace mpe

#endif  // MPE_MODELS_DECODE_H_
