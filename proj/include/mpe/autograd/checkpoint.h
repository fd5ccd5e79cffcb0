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

// Binary checkpoint container for named float parameters and optimizer
// state.
//
// Byte layout, all integers and floats little-endian:
//   char[8]  magic "MPECKPT\0"
//   u32      version (1)
//   u32      metadata length, then that many bytes of UTF-8 JSON
//   u32      tensor count
//   per tensor:
//     u32 name length, name bytes
//     u32 rank, rank x i64 dimensions
//     product(dimensions) x f32 values
//   u8       1 when optimizer state follows, else 0
//   optimizer state:
//     i64 step
//     per tensor, in the order above: f32 first moments, f32 second moments

#ifndef MPE_AUTOGRAD_CHECKPOINT_H_
#define MPE_AUTOGRAD_CHECKPOINT_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mpe/autograd/optim.h"
#include "mpe/autograd/tensor.h"

namespace mpe::ag {

inline constexpr uint32_t kCheckpointVersion = 1;

struct CheckpointTensor {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

struct OptimizerSnapshot {
  int64_t step = 0;
  std::vector<std::vector<float>> first_moments;
  std::vector<std::vector<float>> second_moments;
};

struct Checkpoint {
  std::string metadata = "{}";
  std::vector<CheckpointTensor> tensors;
  std::optional<OptimizerSnapshot> optimizer;
};

Checkpoint CaptureCheckpoint(const std::vector<NamedParameter<float>> &params,
                             const AdamW<float> *optimizer, std::string metadata);

// Copies values into `params` by name. Throws kNotFound for a parameter the
// checkpoint lacks and kInvalidArgument on a shape mismatch.
void RestoreParameters(const Checkpoint &checkpoint, const std::vector<NamedParameter<float>> &params);
void RestoreOptimizer(const Checkpoint &checkpoint, AdamW<float> &optimizer);

void WriteCheckpoint(const std::string &path, const Checkpoint &checkpoint);
// Throws kParse on a bad magic, unknown version or truncated file.
Checkpoint ReadCheckpoint(const std::string &path);

}  // namespace mpe::ag

#endif  // MPE_AUTOGRAD_CHECKPOINT_H_
