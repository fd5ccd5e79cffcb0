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

#include "mpe/corpus/stats.h"

#include "mpe/base/error.h"

namespace mpe {

CorpusStats ComputeCorpusStats(const Corpus &corpus) {
  if (corpus.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "corpus statistics of an empty corpus");
  }
  CorpusStats stats;
  stats.article_count = corpus.size();
  stats.article_word_lengths.reserve(corpus.size());
  for (const auto &record : corpus) {
    stats.pair_count += record.pairs.size();
    for (const auto &pair : record.pairs) ++stats.property_frequency[pair.property];
    stats.article_word_lengths.push_back(CountWords(record.text));
  }
  stats.mean_properties_per_record =
      static_cast<double>(stats.pair_count) / static_cast<double>(stats.article_count);
  return stats;
}

}  // namespace mpe
