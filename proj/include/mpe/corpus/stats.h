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

#ifndef MPE_CORPUS_STATS_H_
#define MPE_CORPUS_STATS_H_

#include <map>
#include <string>
#include <vector>

#include "mpe/corpus/record.h"

namespace mpe {

struct CorpusStats {
  size_t article_count = 0;
  size_t pair_count = 0;
  // One count per (record, pair) instance: a property listed with two
  // values in one record counts twice.
  std::map<std::string, size_t> property_frequency;
  double mean_properties_per_record = 0.0;
  // In corpus order.
  std::vector<size_t> article_word_lengths;
};

// Throws on an empty corpus.
CorpusStats ComputeCorpusStats(const Corpus &corpus);

}  // namespace mpe

#endif  // MPE_CORPUS_STATS_H_
