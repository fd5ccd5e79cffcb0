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

#include "mpe/models/decode.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "mpe/base/error.h"

namespace mpe {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

template <typename V>
std::vector<double> LogSoftmaxImpl(std::span<const V> logits) {
  double mx = kNegInf;
  for (V x : logits) mx = std::max(mx, static_cast<double>(x));
  double total = 0.0;
  for (V x : logits) total += std::exp(static_cast<double>(x) - mx);
  const double lse = mx + std::log(total);
  std::vector<double> out(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) out[i] = static_cast<double>(logits[i]) - lse;
  return out;
}

bool Producible(int32_t token) { return token != kPadId && token != kBosId; }

int32_t ArgMax(const std::vector<double> &row) {
  int32_t best = -1;
  for (size_t v = 0; v < row.size(); ++v) {
    const auto id = static_cast<int32_t>(v);
    if (!Producible(id)) continue;
    if (best < 0 || row[v] > row[best]) best = id;
  }
  return best;
}

void Finalize(Hypothesis &h) {
  const size_t scored = h.tokens.size() + (h.finished ? 1 : 0);
  h.score = scored ? h.log_prob / static_cast<double>(scored) : 0.0;
}

}  // namespace

std::vector<double> LogSoftmax(std::span<const float> logits) { return LogSoftmaxImpl(logits); }
std::vector<double> LogSoftmax(std::span<const double> logits) { return LogSoftmaxImpl(logits); }

Hypothesis GreedySearch(const StepFunction &step, int max_len) {
  Hypothesis h;
  std::vector<int32_t> prefix = {kBosId};
  for (int t = 0; t < max_len; ++t) {
    const std::vector<double> row = step({prefix}).at(0);
    const int32_t token = ArgMax(row);
    h.log_prob += row[token];
    if (token == kEosId) {
      h.finished = true;
      break;
    }
    h.tokens.push_back(token);
    prefix.push_back(token);
  }
  Finalize(h);
  return h;
}

Hypothesis BeamSearch(const StepFunction &step, int width, int max_len, bool length_normalize) {
  if (width < 1) throw Error(ErrorCode::kInvalidArgument, "beam width must be at least 1");
  struct Beam {
    std::vector<int32_t> prefix;
    double log_prob;
  };
  std::vector<Beam> beams = {{{kBosId}, 0.0}};
  std::vector<Hypothesis> finished;
  for (int t = 0; t < max_len && !beams.empty(); ++t) {
    std::vector<std::vector<int32_t>> prefixes;
    for (const auto &b : beams) prefixes.push_back(b.prefix);
    const auto rows = step(prefixes);
    // (score, token, parent rank)
    std::vector<std::tuple<double, int32_t, size_t>> candidates;
    for (size_t b = 0; b < beams.size(); ++b) {
      for (size_t v = 0; v < rows[b].size(); ++v) {
        const auto id = static_cast<int32_t>(v);
        if (Producible(id)) candidates.emplace_back(beams[b].log_prob + rows[b][v], id, b);
      }
    }
    const size_t keep = std::min(candidates.size(), static_cast<size_t>(width));
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<ptrdiff_t>(keep),
                      candidates.end(), [](const auto &a, const auto &b) {
                        if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
                        if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
                        return std::get<2>(a) < std::get<2>(b);
                      });
    std::vector<Beam> next;
    for (size_t k = 0; k < keep; ++k) {
      const auto &[score, token, parent] = candidates[k];
      if (token == kEosId) {
        Hypothesis h;
        h.tokens.assign(beams[parent].prefix.begin() + 1, beams[parent].prefix.end());
        h.log_prob = score;
        h.finished = true;
        Finalize(h);
        finished.push_back(std::move(h));
      } else {
        Beam b{beams[parent].prefix, score};
        b.prefix.push_back(token);
        next.push_back(std::move(b));
      }
    }
    beams = std::move(next);
    // Log-probabilities only fall as sequences grow, so once no live beam
    // is ahead of the best finished sequence none of them can overtake it.
    if (finished.size() >= static_cast<size_t>(width)) {
      double best_finished = -std::numeric_limits<double>::infinity();
      for (const auto &h : finished) best_finished = std::max(best_finished, h.log_prob);
      const bool live_ahead = std::any_of(beams.begin(), beams.end(), [&](const Beam &b) {
        return b.log_prob > best_finished;
      });
      if (!live_ahead) {
        beams.clear();
        break;
      }
    }
  }
  for (const auto &b : beams) {
    Hypothesis h;
    h.tokens.assign(b.prefix.begin() + 1, b.prefix.end());
    h.log_prob = b.log_prob;
    Finalize(h);
    finished.push_back(std::move(h));
  }
  // Stable: among equal scores the earlier (higher-ranked) hypothesis wins.
  return *std::max_element(finished.begin(), finished.end(), [&](const auto &a, const auto &b) {
    return length_normalize ? a.score < b.score : a.log_prob < b.log_prob;
  });
}

template <typename T>
std::vector<std::vector<int32_t>> Generate(Model<T> &model, std::span<const ModelInput> inputs,
                                           const DecodeOptions &options) {
  if (options.beam_size < 1) throw Error(ErrorCode::kInvalidArgument, "beam width must be at least 1");
  ag::NoGradGuard no_grad;
  const int64_t v = model.vocab_size();
  std::vector<std::vector<int32_t>> out(inputs.size());
  const size_t chunk = static_cast<size_t>(std::max(1, options.batch_size));
  for (size_t start = 0; start < inputs.size(); start += chunk) {
    const size_t n = std::min(chunk, inputs.size() - start);
    EncoderMemory<T> memory = model.Encode(inputs.subspan(start, n), false, nullptr);
    if (options.beam_size == 1) {
      std::vector<std::vector<int32_t>> prefixes(n, std::vector<int32_t>{kBosId});
      std::vector<bool> done(n, false);
      size_t remaining = n;
      for (int t = 0; t < options.max_len && remaining > 0; ++t) {
        ag::Tensor<T> logits = model.Decode(memory, prefixes, false, nullptr, true);
        for (size_t i = 0; i < n; ++i) {
          int32_t token = kPadId;
          if (!done[i]) {
            const T *row = logits.data() + static_cast<int64_t>(i) * v;
            token = ArgMax(LogSoftmax(std::span<const T>(row, static_cast<size_t>(v))));
            if (token == kEosId) {
              done[i] = true;
              --remaining;
            } else {
              out[start + i].push_back(token);
            }
          }
          prefixes[i].push_back(done[i] ? kPadId : token);
        }
      }
      continue;
    }
    for (size_t i = 0; i < n; ++i) {
      const int64_t row = static_cast<int64_t>(i);
      StepFunction step = [&](const std::vector<std::vector<int32_t>> &prefixes) {
        std::vector<int64_t> rows(prefixes.size(), row);
        EncoderMemory<T> tiled = SelectRows(memory, rows);
        ag::Tensor<T> logits = model.Decode(tiled, prefixes, false, nullptr, true);
        std::vector<std::vector<double>> result;
        for (size_t k = 0; k < prefixes.size(); ++k) {
          result.push_back(LogSoftmax(
              std::span<const T>(logits.data() + static_cast<int64_t>(k) * v, static_cast<size_t>(v))));
        }
        return result;
      };
      out[start + i] = BeamSearch(step, options.beam_size, options.max_len).tokens;
    }
  }
  return out;
}

template std::vector<std::vector<int32_t>> Generate(Model<float> &, std::span<const ModelInput>,
                                                    const DecodeOptions &);
template std::vector<std::vector<int32_t>> Generate(Model<double> &, std::span<const ModelInput>,
                                                    const DecodeOptions &);

}  // namespace mpe
