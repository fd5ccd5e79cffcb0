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

#ifndef MPE_MODELS_ARCHITECTURES_H_
#define MPE_MODELS_ARCHITECTURES_H_

#include <memory>

#include "mpe/models/model.h"

namespace mpe::internal {

template <typename T>
std::unique_ptr<Model<T>> MakeTransformer(const ModelConfig &config, int32_t vocab_size,
                                          uint64_t seed);

template <typename T>
std::unique_ptr<Model<T>> MakeRecurrent(const ModelConfig &config, int32_t vocab_size,
                                        uint64_t seed);

}  // namespace mpe::internal

#endif  // MPE_MODELS_ARCHITECTURES_H_
