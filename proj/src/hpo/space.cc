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

#include "mpe/hpo/space.h"

#include <json.hpp>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "mpe/base/error.h"

namespace mpe {
namespace {

using nlohmann::json;

[[noreturn]] void Invalid(const std::string &msg) { throw Error(ErrorCode::kInvalidArgument, msg); }

const char *KindName(ParamKind kind) {
  switch (kind) {
    case ParamKind::kCategorical:
      return "categorical";
    case ParamKind::kInt:
      return "int";
    case ParamKind::kReal:
      return "real";
  }
  return "real";
}

std::string ChoiceString(const json &j) { return j.is_string() ? j.get<std::string>() : j.dump(); }

json ChoiceJson(const std::string &choice) {
  // Numbers and booleans go back to their JSON form.
  try {
    json j = json::parse(choice);
    if (j.is_number() || j.is_boolean()) return j;
  } catch (const json::exception &) {
  }
  return choice;
}

}  // namespace

ParamSpec ParamSpec::Categorical(std::string name, std::vector<std::string> choices) {
  ParamSpec p;
  p.name = std::move(name);
  p.kind = ParamKind::kCategorical;
  p.choices = std::move(choices);
  return p;
}

ParamSpec ParamSpec::Int(std::string name, int64_t low, int64_t high, bool log) {
  ParamSpec p;
  p.name = std::move(name);
  p.kind = ParamKind::kInt;
  p.low = static_cast<double>(low);
  p.high = static_cast<double>(high);
  p.log = log;
  return p;
}

ParamSpec ParamSpec::Real(std::string name, double low, double high, bool log) {
  ParamSpec p;
  p.name = std::move(name);
  p.kind = ParamKind::kReal;
  p.low = low;
  p.high = high;
  p.log = log;
  return p;
}

void SearchSpace::Validate() const {
  std::set<std::string> names;
  for (const auto &p : params) {
    if (p.name.empty()) Invalid("search space parameter without a name");
    if (!names.insert(p.name).second) Invalid("parameter '" + p.name + "' is declared twice");
    if (p.kind == ParamKind::kCategorical) {
      if (p.choices.empty()) Invalid("parameter '" + p.name + "' has no choices");
      if (std::set<std::string>(p.choices.begin(), p.choices.end()).size() != p.choices.size()) {
        Invalid("parameter '" + p.name + "' repeats a choice");
      }
      continue;
    }
    if (!std::isfinite(p.low) || !std::isfinite(p.high) || p.low > p.high) {
      Invalid("parameter '" + p.name + "' has an empty range");
    }
    if (p.log && p.low <= 0.0) Invalid("log parameter '" + p.name + "' needs a positive range");
    if (p.kind == ParamKind::kInt && (p.low != std::floor(p.low) || p.high != std::floor(p.high))) {
      Invalid("integer parameter '" + p.name + "' has fractional bounds");
    }
  }
}

const ParamSpec *SearchSpace::Find(const std::string &name) const {
  for (const auto &p : params) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

bool SearchSpace::Contains(const Assignment &assignment) const {
  if (assignment.size() != params.size()) return false;
  for (const auto &p : params) {
    auto it = assignment.find(p.name);
    if (it == assignment.end()) return false;
    const ParamValue &v = it->second;
    switch (p.kind) {
      case ParamKind::kCategorical: {
        const auto *s = std::get_if<std::string>(&v);
        if (!s || std::find(p.choices.begin(), p.choices.end(), *s) == p.choices.end()) return false;
        break;
      }
      case ParamKind::kInt: {
        const auto *i = std::get_if<int64_t>(&v);
        if (!i || *i < p.low || *i > p.high) return false;
        break;
      }
      case ParamKind::kReal: {
        const auto *d = std::get_if<double>(&v);
        if (!d || !(*d >= p.low && *d <= p.high)) return false;
        break;
      }
    }
  }
  return true;
}

std::string SearchSpace::ToJson() const {
  json list = json::array();
  for (const auto &p : params) {
    json j = {{"name", p.name}, {"type", KindName(p.kind)}};
    if (p.kind == ParamKind::kCategorical) {
      json choices = json::array();
      for (const auto &c : p.choices) choices.push_back(ChoiceJson(c));
      j["choices"] = choices;
    } else if (p.kind == ParamKind::kInt) {
      j["low"] = static_cast<int64_t>(p.low);
      j["high"] = static_cast<int64_t>(p.high);
      j["log"] = p.log;
    } else {
      j["low"] = p.low;
      j["high"] = p.high;
      j["log"] = p.log;
    }
    list.push_back(j);
  }
  return json{{"parameters", list}}.dump(2);
}

SearchSpace SearchSpace::FromJson(const std::string &text) {
  SearchSpace space;
  try {
    const json doc = json::parse(text);
    for (const auto &[key, _] : doc.items()) {
      if (key != "parameters") throw Error(ErrorCode::kParse, "unknown search space key '" + key + "'");
    }
    for (const auto &j : doc.at("parameters")) {
      for (const auto &[key, _] : j.items()) {
        if (key != "name" && key != "type" && key != "choices" && key != "low" && key != "high" &&
            key != "log") {
          throw Error(ErrorCode::kParse, "unknown parameter key '" + key + "'");
        }
      }
      const std::string type = j.at("type").get<std::string>();
      const std::string name = j.at("name").get<std::string>();
      if (type == "categorical") {
        std::vector<std::string> choices;
        for (const auto &c : j.at("choices")) choices.push_back(ChoiceString(c));
        space.params.push_back(ParamSpec::Categorical(name, std::move(choices)));
      } else if (type == "int") {
        space.params.push_back(ParamSpec::Int(name, j.at("low").get<int64_t>(),
                                              j.at("high").get<int64_t>(), j.value("log", false)));
      } else if (type == "real") {
        space.params.push_back(ParamSpec::Real(name, j.at("low").get<double>(),
                                               j.at("high").get<double>(), j.value("log", false)));
      } else {
        throw Error(ErrorCode::kParse, "unknown parameter type '" + type + "'");
      }
    }
  } catch (const json::exception &e) {
    throw Error(ErrorCode::kParse, std::string("search space: ") + e.what());
  }
  space.Validate();
  return space;
}

SearchSpace SearchSpace::Load(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot open search space " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return FromJson(buffer.str());
}

SearchSpace DefaultSearchSpace() {
  SearchSpace s;
  s.params = {
      ParamSpec::Categorical("batch_size", {"64", "128", "256", "512"}),
      ParamSpec::Categorical("learning_rate",
                             {"1e-05", "5e-05", "0.0001", "0.0005", "0.001", "0.005", "0.01"}),
      ParamSpec::Categorical("schedule", {"inverse_sqrt", "linear"}),
      ParamSpec::Real("hidden_dropout", 0.0, 0.1),
      ParamSpec::Real("attention_dropout", 0.0, 0.1),
      ParamSpec::Real("activation_dropout", 0.0, 0.1),
      ParamSpec::Real("weight_decay", 0.0, 0.1),
      ParamSpec::Int("encoder_layers", 1, 6),
      ParamSpec::Int("decoder_layers", 1, 6),
      ParamSpec::Categorical("embedding_dim", {"32", "64", "128", "256", "512"}),
      ParamSpec::Categorical("ffn_dim", {"64", "128", "256", "512", "1024", "2048"}),
      ParamSpec::Categorical("attention_heads", {"4", "8", "16", "32"}),
      ParamSpec::Categorical("activation", {"relu", "gelu"}),
      ParamSpec::Categorical("learned_positions", {"true", "false"}),
      ParamSpec::Categorical("tie_all_embeddings", {"true", "false"}),
  };
  return s;
}

double AsNumber(const ParamValue &value) {
  if (const auto *i = std::get_if<int64_t>(&value)) return static_cast<double>(*i);
  if (const auto *d = std::get_if<double>(&value)) return *d;
  const std::string &s = std::get<std::string>(value);
  try {
    size_t used = 0;
    const double d = std::stod(s, &used);
    if (used == s.size()) return d;
  } catch (const std::exception &) {
  }
  Invalid("'" + s + "' is not a number");
}

std::string AsString(const ParamValue &value) {
  if (const auto *s = std::get_if<std::string>(&value)) return *s;
  if (const auto *i = std::get_if<int64_t>(&value)) return std::to_string(*i);
  return json(std::get<double>(value)).dump();
}

std::string AssignmentJson(const Assignment &assignment) {
  json j = json::object();
  for (const auto &[name, v] : assignment) {
    if (const auto *s = std::get_if<std::string>(&v)) {
      j[name] = *s;
    } else if (const auto *i = std::get_if<int64_t>(&v)) {
      j[name] = *i;
    } else {
      j[name] = std::get<double>(v);
    }
  }
  return j.dump();
}

}  // namespace mpe
