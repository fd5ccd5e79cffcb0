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

// Deterministic synthetic MPE corpora.
//
// Articles are built from sentence templates over a pseudo-word language.
// Every pair's value is recoverable from its article: it is stated verbatim,
// stated through a fixed alias (adjectival form or initials), or, when
// correlations are enabled, implied by another stated pair through a fixed
// mapping. The generator reports which of the three applies to each pair.

#ifndef MPE_CORPUS_SYNTHETIC_H_
#define MPE_CORPUS_SYNTHETIC_H_

#include <cstdint>
#include <string>
#include <vector>

#include "mpe/corpus/record.h"

namespace mpe {

struct GeneratorConfig {
  size_t article_count = 1000;
  size_t property_count = 40;
  double mean_pairs_per_record = 4.5;
  size_t max_properties_per_record = 10;
  // Share of properties whose values come from a small skewed pool.
  double categorical_fraction = 0.5;
  size_t categorical_pool_size = 6;
  size_t relational_pool_size = 120;
  // Probability a value is written verbatim; otherwise its alias is used.
  double value_in_text_probability = 0.8;
  // Probability a relational property carries two values.
  double multi_value_probability = 0.1;
  // Zipf exponent of property popularity; produces rare properties.
  double property_zipf_exponent = 1.0;
  double mean_article_words = 60.0;
  // Log-normal spread of article lengths.
  double article_length_sigma = 0.35;
  // Probability that a record holding a correlation source property also
  // gets the dependent property, with the value fixed by the source value.
  double correlation_rate = 0.0;
  // Probability that a correlated answer is still stated in the text.
  double answer_redundancy = 1.0;
};

enum class SurfaceMode { kVerbatim, kAlias, kCorrelated };

const char *SurfaceModeName(SurfaceMode mode);

struct GeneratedFact {
  PropertyValuePair pair;
  // The string embedded in the article; empty for unstated correlated facts.
  std::string surface;
  SurfaceMode mode = SurfaceMode::kVerbatim;
};

struct GeneratedArticle {
  std::string article_id;
  std::string subject;
  std::vector<GeneratedFact> facts;
};

struct GeneratedProperty {
  std::string name;
  bool categorical = false;
  // "category", "place", "person" or "year".
  std::string value_kind;
  std::vector<std::string> values;
  // Sampling weights aligned with values.
  std::vector<double> value_weights;
  double popularity = 0.0;
  // Property-specific verb phrase used by the cue template.
  std::string cue;
  // Name of the property this one depends on, when correlated.
  std::string correlated_with;
};

struct SyntheticCorpus {
  Corpus records;
  std::vector<GeneratedProperty> properties;
  std::vector<GeneratedArticle> articles;
};

SyntheticCorpus GenerateSynthetic(const GeneratorConfig &config, uint64_t seed);

// Ground-truth metadata as JSON lines: a header line with the property
// inventory, then one line per article.
std::string SyntheticMetadataJsonLines(const SyntheticCorpus &corpus);

}  // namespace mpe

#endif  // MPE_CORPUS_SYNTHETIC_H_
