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

#include "mpe/corpus/synthetic.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <map>
#include <set>
#include <sstream>

#include "mpe/base/error.h"
#include "mpe/base/random.h"

namespace mpe {
namespace {

constexpr std::array<const char *, 48> kPropertyNames = {
    "country of citizenship", "place of birth", "date of birth", "occupation",
    "genre", "continent", "instrument", "sport", "language", "employer",
    "educated at", "award received", "member of", "position held", "spouse",
    "father", "mother", "sibling", "child", "country", "located in",
    "capital", "official language", "currency", "founded by", "headquarters",
    "industry", "record label", "publisher", "director", "author",
    "composer", "architect", "architectural style", "religion",
    "ethnic group", "military branch", "conflict", "league", "team",
    "parent taxon", "taxon rank", "home venue", "place of death",
    "date of death", "owned by", "operator", "manufacturer"};

constexpr std::array<const char *, 20> kOnsets = {
    "b", "d", "f", "g", "k", "l", "m", "n", "p", "r",
    "s", "t", "v", "z", "br", "dr", "kr", "st", "th", "sh"};
constexpr std::array<const char *, 8> kVowels = {"a", "e", "i", "o", "u",
                                                 "ai", "ou", "ea"};
constexpr std::array<const char *, 6> kCodas = {"", "", "n", "r", "l", "s"};

constexpr std::array<const char *, 6> kFillerTemplates = {
    "The {} near the {} was {}.",
    "Many {} describe it as {} and {}.",
    "In later years the {} became {}.",
    "It is often linked to {} {}.",
    "Local {} remain {}.",
    "A {} of {} was reported."};

std::string Capitalize(std::string word) {
  if (!word.empty() && word[0] >= 'a' && word[0] <= 'z') word[0] -= 'a' - 'A';
  return word;
}

std::string PseudoWord(Rng &rng, int min_syllables, int max_syllables) {
  const int n = static_cast<int>(rng.UniformInt(min_syllables, max_syllables));
  std::string word;
  for (int i = 0; i < n; ++i) {
    word += kOnsets[rng.Uniform(kOnsets.size())];
    word += kVowels[rng.Uniform(kVowels.size())];
    if (i + 1 == n) word += kCodas[rng.Uniform(kCodas.size())];
  }
  return word;
}

std::vector<std::string> UniqueWords(Rng &rng, size_t count, int min_syl,
                                     int max_syl, std::set<std::string> &taken) {
  std::vector<std::string> words;
  while (words.size() < count) {
    std::string w = PseudoWord(rng, min_syl, max_syl);
    if (taken.insert(w).second) words.push_back(std::move(w));
  }
  return words;
}

// Replaces successive "{}" markers.
std::string Fill(std::string_view pattern, const std::vector<std::string> &args) {
  std::string out;
  size_t next = 0;
  for (size_t i = 0; i < pattern.size(); ++i) {
    if (pattern[i] == '{' && i + 1 < pattern.size() && pattern[i + 1] == '}') {
      out += next < args.size() ? args[next] : std::string();
      ++next;
      ++i;
    } else {
      out.push_back(pattern[i]);
    }
  }
  return out;
}

uint64_t Fnv1a(std::string_view s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string Alias(const GeneratedProperty &property, const std::string &value) {
  if (property.value_kind == "year") return value;
  if (property.value_kind == "person") {
    const auto space = value.find(' ');
    return value.substr(0, 1) + "." + value.substr(space);
  }
  return value + "ian";
}

void Validate(const GeneratorConfig &c) {
  auto unit = [](double p, const char *name) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::string(name) + " must lie in [0, 1]");
    }
  };
  unit(c.categorical_fraction, "categorical_fraction");
  unit(c.value_in_text_probability, "value_in_text_probability");
  unit(c.multi_value_probability, "multi_value_probability");
  unit(c.correlation_rate, "correlation_rate");
  unit(c.answer_redundancy, "answer_redundancy");
  if (c.article_count == 0) {
    throw Error(ErrorCode::kInvalidArgument, "article_count must be positive");
  }
  if (c.mean_pairs_per_record < 1.0) {
    throw Error(ErrorCode::kInvalidArgument,
                "mean_pairs_per_record must be at least 1");
  }
  if (c.max_properties_per_record == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "max_properties_per_record must be positive");
  }
  if (static_cast<double>(c.property_count) < std::ceil(c.mean_pairs_per_record)) {
    throw Error(ErrorCode::kInvalidArgument,
                "property inventory (" + std::to_string(c.property_count) +
                    ") is smaller than the properties per record (" +
                    std::to_string(c.mean_pairs_per_record) + ")");
  }
  if (c.categorical_pool_size < 2 || c.relational_pool_size < 2) {
    throw Error(ErrorCode::kInvalidArgument, "value pools need at least 2 values");
  }
  if (c.mean_article_words <= 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "mean_article_words must be positive");
  }
}

std::vector<GeneratedProperty> MakeProperties(const GeneratorConfig &config,
                                              Rng &rng,
                                              std::set<std::string> &taken) {
  std::vector<GeneratedProperty> properties(config.property_count);
  const size_t categorical = static_cast<size_t>(
      std::llround(config.categorical_fraction * config.property_count));
  std::vector<size_t> order(config.property_count);
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.Shuffle(order.begin(), order.end());
  std::vector<bool> is_categorical(config.property_count, false);
  for (size_t i = 0; i < categorical; ++i) is_categorical[order[i]] = true;

  std::set<std::string> names;
  for (size_t i = 0; i < properties.size(); ++i) {
    GeneratedProperty &p = properties[i];
    if (i < kPropertyNames.size()) {
      p.name = kPropertyNames[i];
    } else {
      do {
        p.name = PseudoWord(rng, 2, 3) + " " + kPropertyNames[rng.Uniform(kPropertyNames.size())];
      } while (names.count(p.name));
    }
    names.insert(p.name);
    p.categorical = is_categorical[i];
    p.popularity = 1.0 / std::pow(static_cast<double>(i + 1), config.property_zipf_exponent);
    p.cue = UniqueWords(rng, 1, 2, 2, taken)[0] + "s";
    if (p.categorical) {
      p.value_kind = "category";
      for (auto &w : UniqueWords(rng, config.categorical_pool_size, 2, 3, taken)) {
        p.values.push_back(Capitalize(w));
      }
      // Geometric weights keep the normalized entropy well below 0.7.
      double w = 1.0;
      for (size_t v = 0; v < p.values.size(); ++v, w *= 0.4) {
        p.value_weights.push_back(w);
      }
    } else {
      static constexpr std::array<const char *, 3> kKinds = {"place", "person", "year"};
      p.value_kind = kKinds[rng.Uniform(kKinds.size())];
      std::set<std::string> pool;
      while (pool.size() < config.relational_pool_size) {
        std::string v;
        if (p.value_kind == "place") {
          v = Capitalize(PseudoWord(rng, 2, 3));
        } else if (p.value_kind == "person") {
          v = Capitalize(PseudoWord(rng, 1, 2)) + " " + Capitalize(PseudoWord(rng, 2, 3));
        } else {
          v = std::to_string(rng.UniformInt(1500, 2020));
        }
        if (pool.insert(v).second) p.values.push_back(v);
      }
      p.value_weights.assign(p.values.size(), 1.0);
    }
  }

  if (config.correlation_rate > 0.0) {
    // Each of the first half of categorical properties depends on one
    // place-valued relational property.
    std::vector<size_t> sources;
    for (size_t i = 0; i < properties.size(); ++i) {
      if (!properties[i].categorical && properties[i].value_kind == "place") {
        sources.push_back(i);
      }
    }
    size_t used = 0;
    size_t wanted = (categorical + 1) / 2;
    for (size_t i = 0; i < properties.size() && !sources.empty() && used < wanted; ++i) {
      if (!properties[i].categorical) continue;
      properties[i].correlated_with = properties[sources[used % sources.size()]].name;
      ++used;
    }
  }
  return properties;
}

}  // namespace

const char *SurfaceModeName(SurfaceMode mode) {
  switch (mode) {
    case SurfaceMode::kVerbatim:
      return "verbatim";
    case SurfaceMode::kAlias:
      return "alias";
    case SurfaceMode::kCorrelated:
      return "correlated";
  }
  return "unknown";
}

SyntheticCorpus GenerateSynthetic(const GeneratorConfig &config, uint64_t seed) {
  Validate(config);
  Rng rng(seed);
  std::set<std::string> taken;
  SyntheticCorpus out;
  out.properties = MakeProperties(config, rng, taken);
  const auto &properties = out.properties;

  std::map<std::string, size_t> index_of;
  for (size_t i = 0; i < properties.size(); ++i) index_of[properties[i].name] = i;

  std::vector<std::string> filler = UniqueWords(rng, 300, 1, 3, taken);

  double relational_share = 0.0;
  for (const auto &p : properties) relational_share += p.categorical ? 0.0 : 1.0;
  relational_share /= static_cast<double>(properties.size());
  const size_t max_k = std::min(config.max_properties_per_record, properties.size());
  const double lambda = std::max(
      0.0, config.mean_pairs_per_record /
                   (1.0 + config.multi_value_probability * relational_share) -
               1.0);

  std::vector<double> popularity;
  for (const auto &p : properties) popularity.push_back(p.popularity);

  const double sigma = config.article_length_sigma;
  const double mu = std::log(config.mean_article_words) - 0.5 * sigma * sigma;

  for (size_t a = 0; a < config.article_count; ++a) {
    GeneratedArticle article;
    char id[32];
    std::snprintf(id, sizeof(id), "syn-%06zu", a);
    article.article_id = id;
    article.subject = Capitalize(PseudoWord(rng, 1, 2)) + " " + Capitalize(PseudoWord(rng, 2, 3));

    const size_t k = std::min<size_t>(max_k, 1 + static_cast<size_t>(rng.Poisson(lambda)));
    std::vector<double> weights = popularity;
    std::vector<size_t> chosen;
    for (size_t i = 0; i < k; ++i) {
      const size_t p = rng.Categorical(weights);
      weights[p] = 0.0;
      chosen.push_back(p);
    }

    // Draw values.
    std::vector<std::vector<std::string>> values(properties.size());
    for (size_t p : chosen) {
      const auto &prop = properties[p];
      const size_t first = rng.Categorical(prop.value_weights);
      values[p].push_back(prop.values[first]);
      if (!prop.categorical && rng.Bernoulli(config.multi_value_probability)) {
        size_t second = rng.Categorical(prop.value_weights);
        while (second == first) second = rng.Categorical(prop.value_weights);
        values[p].push_back(prop.values[second]);
      }
    }

    // Correlated dependents take their value from the source property.
    std::vector<bool> stated(properties.size(), true);
    if (config.correlation_rate > 0.0) {
      for (size_t p = 0; p < properties.size(); ++p) {
        const auto &prop = properties[p];
        if (prop.correlated_with.empty()) continue;
        const size_t source = index_of.at(prop.correlated_with);
        if (values[source].empty()) continue;
        if (!rng.Bernoulli(config.correlation_rate)) continue;
        const std::string &anchor = values[source].front();
        const std::string dependent = prop.values[Fnv1a(anchor) % prop.values.size()];
        if (values[p].empty()) chosen.push_back(p);
        values[p] = {dependent};
        stated[p] = rng.Bernoulli(config.answer_redundancy);
      }
    }

    std::vector<std::string> fact_sentences;
    for (size_t p : chosen) {
      const auto &prop = properties[p];
      std::vector<std::string> surfaces;
      for (const auto &v : values[p]) {
        GeneratedFact fact;
        fact.pair = {prop.name, v};
        if (!stated[p]) {
          fact.mode = SurfaceMode::kCorrelated;
        } else if (rng.Bernoulli(config.value_in_text_probability)) {
          fact.surface = v;
          fact.mode = SurfaceMode::kVerbatim;
        } else {
          fact.surface = Alias(prop, v);
          fact.mode = fact.surface == v ? SurfaceMode::kVerbatim : SurfaceMode::kAlias;
        }
        if (stated[p]) surfaces.push_back(fact.surface);
        article.facts.push_back(std::move(fact));
      }
      if (surfaces.empty()) continue;
      std::string joined = surfaces[0];
      for (size_t i = 1; i < surfaces.size(); ++i) joined += " and " + surfaces[i];
      const bool plural = surfaces.size() > 1;
      std::string sentence;
      switch (rng.Uniform(4)) {
        case 0:
          sentence = Fill(plural ? "The {} of {} are {}." : "The {} of {} is {}.",
                          {prop.name, article.subject, joined});
          break;
        case 1:
          sentence = Fill("{} has {} as its {}.", {article.subject, joined, prop.name});
          break;
        case 2:
          sentence = Fill(plural ? "Its {} are {}." : "Its {} is {}.", {prop.name, joined});
          break;
        default:
          sentence = Fill("{} {} {}.", {article.subject, prop.cue, joined});
          break;
      }
      fact_sentences.push_back(std::move(sentence));
    }

    const double target_words = std::max(
        8.0, std::round(std::exp(mu + sigma * rng.Normal())));
    std::vector<std::string> body = fact_sentences;
    auto word_total = [&] {
      size_t n = 0;
      for (const auto &s : body) n += CountWords(s);
      return n;
    };
    size_t words = word_total() + 4;
    while (static_cast<double>(words) < target_words) {
      const char *pattern = kFillerTemplates[rng.Uniform(kFillerTemplates.size())];
      std::vector<std::string> args;
      for (int i = 0; i < 3; ++i) args.push_back(filler[rng.Uniform(filler.size())]);
      std::string s = Capitalize(Fill(pattern, args));
      words += CountWords(s);
      const size_t at = rng.Uniform(body.size() + 1);
      body.insert(body.begin() + static_cast<std::ptrdiff_t>(at), std::move(s));
    }

    std::string text = Fill("{} is a {} {}.", {article.subject, filler[rng.Uniform(filler.size())],
                                                filler[rng.Uniform(filler.size())]});
    for (const auto &s : body) text += " " + s;

    MpeRecord record;
    record.article_id = article.article_id;
    record.text = std::move(text);
    for (const auto &fact : article.facts) record.pairs.push_back(fact.pair);
    DeduplicatePairs(record.pairs);
    out.records.push_back(std::move(record));
    out.articles.push_back(std::move(article));
  }
  return out;
}

std::string SyntheticMetadataJsonLines(const SyntheticCorpus &corpus) {
  using nlohmann::json;
  std::ostringstream out;
  json header;
  json props = json::array();
  for (const auto &p : corpus.properties) {
    json jp = {{"name", p.name},
               {"categorical", p.categorical},
               {"value_kind", p.value_kind},
               {"popularity", p.popularity},
               {"cue", p.cue},
               {"values", p.values}};
    if (!p.correlated_with.empty()) jp["correlated_with"] = p.correlated_with;
    props.push_back(std::move(jp));
  }
  header["properties"] = std::move(props);
  out << header.dump() << '\n';
  for (const auto &a : corpus.articles) {
    json facts = json::array();
    for (const auto &f : a.facts) {
      facts.push_back({{"property", f.pair.property},
                       {"value", f.pair.value},
                       {"surface", f.surface},
                       {"mode", SurfaceModeName(f.mode)}});
    }
    out << json{{"article_id", a.article_id}, {"subject", a.subject}, {"facts", facts}}.dump()
        << '\n';
  }
  return out.str();
}

}  // namespace mpe
