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

#include "mpe/corpus/record.h"

#include <json.hpp>
#include <ostream>
#include <set>

#include "mpe/base/error.h"

namespace mpe {

using nlohmann::json;

PropertyValuePair CanonicalPair(const PropertyValuePair &pair,
                                const NormalizationPolicy &policy) {
  PropertyValuePair out{Normalize(pair.property, policy),
                        Normalize(pair.value, policy)};
  if (out.property.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty property name");
  }
  if (out.value.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "empty value for property '" + out.property + "'");
  }
  return out;
}

void DeduplicatePairs(std::vector<PropertyValuePair> &pairs) {
  std::set<PropertyValuePair> seen;
  std::vector<PropertyValuePair> unique;
  unique.reserve(pairs.size());
  for (auto &pair : pairs) {
    if (seen.insert(pair).second) unique.push_back(std::move(pair));
  }
  pairs = std::move(unique);
}

MpeRecord ParseRecordLine(std::string_view line,
                          const NormalizationPolicy &policy,
                          const RecordParseOptions &options) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error &e) {
    throw Error(ErrorCode::kParse, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kParse, "record is not an object");

  MpeRecord record;
  auto id = j.find("article_id");
  if (id == j.end() || !id->is_string()) {
    throw Error(ErrorCode::kParse, "missing string field 'article_id'");
  }
  record.article_id = id->get<std::string>();
  if (Trim(record.article_id).empty()) {
    throw Error(ErrorCode::kParse, "empty 'article_id'");
  }

  auto text = j.find("text");
  if (text != j.end()) {
    if (!text->is_string()) throw Error(ErrorCode::kParse, "'text' is not a string");
    record.text = text->get<std::string>();
  } else if (options.require_text) {
    throw Error(ErrorCode::kParse, "missing string field 'text'");
  }

  auto pairs = j.find("pairs");
  if (pairs == j.end() || !pairs->is_array()) {
    throw Error(ErrorCode::kParse, "missing array field 'pairs'");
  }
  for (const auto &p : *pairs) {
    if (!p.is_object()) throw Error(ErrorCode::kParse, "pair is not an object");
    auto prop = p.find("property");
    auto value = p.find("value");
    if (prop == p.end() || !prop->is_string() || value == p.end() ||
        !value->is_string()) {
      throw Error(ErrorCode::kParse,
                  "pair needs string fields 'property' and 'value'");
    }
    record.pairs.push_back(CanonicalPair(
        {prop->get<std::string>(), value->get<std::string>()}, policy));
  }
  DeduplicatePairs(record.pairs);
  if (record.pairs.empty() && !options.allow_empty_pairs) {
    throw Error(ErrorCode::kInvalidArgument,
                "record '" + record.article_id + "' has no pairs");
  }
  return record;
}

std::string RecordToJsonLine(const MpeRecord &record, bool include_text) {
  json j;
  j["article_id"] = record.article_id;
  if (include_text) j["text"] = record.text;
  json pairs = json::array();
  for (const auto &pair : record.pairs) {
    pairs.push_back({{"property", pair.property}, {"value", pair.value}});
  }
  j["pairs"] = std::move(pairs);
  return j.dump();
}

RecordReader::RecordReader(const std::filesystem::path &path,
                           NormalizationPolicy policy,
                           RecordParseOptions options)
    : path_(path), in_(path), policy_(policy), options_(options) {
  if (!in_) throw Error(ErrorCode::kNotFound, "cannot open " + path.string());
}

std::optional<MpeRecord> RecordReader::Next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_number_;
    if (Trim(line).empty()) continue;
    MpeRecord record;
    try {
      record = ParseRecordLine(line, policy_, options_);
    } catch (const Error &e) {
      throw Error(e.code(), path_.string() + ":" +
                                std::to_string(line_number_) + ": " + e.what());
    }
    if (!seen_ids_.insert(record.article_id).second) {
      throw Error(ErrorCode::kInvalidArgument,
                  path_.string() + ":" + std::to_string(line_number_) +
                      ": duplicate article_id '" + record.article_id + "'");
    }
    return record;
  }
  return std::nullopt;
}

Corpus LoadRecords(const std::filesystem::path &path,
                   const NormalizationPolicy &policy,
                   const RecordParseOptions &options) {
  RecordReader reader(path, policy, options);
  Corpus records;
  while (auto record = reader.Next()) records.push_back(std::move(*record));
  return records;
}

void WriteRecords(std::ostream &out, const Corpus &records, bool include_text) {
  for (const auto &record : records) {
    out << RecordToJsonLine(record, include_text) << '\n';
  }
}

void WriteRecords(const std::filesystem::path &path, const Corpus &records,
                  bool include_text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  WriteRecords(out, records, include_text);
}

}  // namespace mpe
