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

// Hyperparameter search spaces: categorical, integer and real parameters,
// the latter two optionally on a log scale.
//
// Space file layout (JSON):
//   {"parameters": [
//     {"name": "batch_size", "type": "categorical", "choices": [64, 128]},
//     {"name": "encoder_layers", "type": "int", "low": 1, "high": 6},
//     {"name": "weight_decay", "type": "real", "low": 0, "high": 0.1,
//      "log": false}]}
// Categorical choices are kept as strings; numbers and booleans are stored
// in their JSON spelling.

#ifndef MPE_HPO_SPACE_H_
#define MPE_HPO_SPACE_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace mpe {

enum class ParamKind { kCategorical, kInt, kReal };

struct ParamSpec {
  std::string name;
  ParamKind kind = ParamKind::kReal;
  std::vector<std::string> choices;
  double low = 0.0;
  double high = 1.0;
  bool log = false;

  static ParamSpec Categorical(std::string name, std::vector<std::string> choices);
  static ParamSpec Int(std::string name, int64_t low, int64_t high, bool log = false);
  static ParamSpec Real(std::string name, double low, double high, bool log = false);
};

using ParamValue = std::variant<int64_t, double, std::string>;
using Assignment = std::map<std::string, ParamValue>;

struct SearchSpace {
  std::vector<ParamSpec> params;

  // Throws kInvalidArgument on an empty or repeated name, an empty choice
  // list, low > high, or a non-positive log bound.
  void Validate() const;
  const ParamSpec *Find(const std::string &name) const;
  // True when every parameter is assigned a value of the right kind inside
  // its range, and nothing else is assigned.
  bool Contains(const Assignment &assignment) const;

  std::string ToJson() const;
  static SearchSpace FromJson(const std::string &json);
  static SearchSpace Load(const std::filesystem::path &path);
};

// Batch size, learning rate grid, schedule, dropouts, weight decay, layer
// counts, widths, heads, activation, positional and embedding sharing, as
// searched for the from-scratch transformers. Widths and heads are shared
// between encoder and decoder.
SearchSpace DefaultSearchSpace();

// Numeric view: integers and reals as is, categorical choices parsed as
// numbers. Throws kInvalidArgument when the value is not numeric.
double AsNumber(const ParamValue &value);
std::string AsString(const ParamValue &value);
std::string AssignmentJson(const Assignment &assignment);

}  // namespace mpe

#endif  // MPE_HPO_SPACE_H_
