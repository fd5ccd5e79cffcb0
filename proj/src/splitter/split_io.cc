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

#include <fstream>
#include <json.hpp>

#include "mpe/base/error.h"
#include "mpe/base/text.h"
#include "mpe/splitter/split.h"

namespace mpe {

using nlohmann::json;

namespace {

std::ofstream OpenOut(const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  return out;
}

std::ifstream OpenIn(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot open " + path.string());
  return in;
}

template <typename Fn>
void ForEachJsonLine(const std::filesystem::path &path, Fn &&fn) {
  std::ifstream in = OpenIn(path);
  std::string line;
  size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (Trim(line).empty()) continue;
    try {
      fn(json::parse(line));
    } catch (const json::exception &e) {
      throw Error(ErrorCode::kParse,
                  path.string() + ":" + std::to_string(number) + ": " + e.what());
    } catch (const Error &e) {
      throw Error(e.code(), path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
}

}  // namespace

void WriteAssignment(const SplitAssignment &assignment,
                     const std::filesystem::path &assignment_path,
                     const std::filesystem::path &sidecar_path) {
  {
    std::ofstream out = OpenOut(assignment_path);
    for (const auto &[id, split] : assignment.split_of) {
      out << json{{"article_id", id}, {"split", SplitName(split)}}.dump() << '\n';
    }
  }
  json sidecar;
  sidecar["test_only_properties"] = assignment.test_only_properties;
  sidecar["val_only_properties"] = assignment.val_only_properties;
  sidecar["shared_valtest_properties"] = assignment.shared_valtest_properties;
  json dropped = json::array();
  for (const auto &d : assignment.dropped_pairs) {
    dropped.push_back({{"article_id", d.article_id},
                       {"property", d.pair.property},
                       {"value", d.pair.value},
                       {"reason", d.reason}});
  }
  sidecar["dropped_pairs"] = std::move(dropped);
  std::ofstream out = OpenOut(sidecar_path);
  out << sidecar.dump(2) << '\n';
}

SplitAssignment ReadAssignment(const std::filesystem::path &assignment_path,
                               const std::filesystem::path &sidecar_path) {
  SplitAssignment assignment;
  ForEachJsonLine(assignment_path, [&](const json &j) {
    const std::string id = j.at("article_id").get<std::string>();
    if (!assignment.split_of.emplace(id, ParseSplit(j.at("split").get<std::string>())).second) {
      throw Error(ErrorCode::kInvalidArgument, "article '" + id + "' assigned twice");
    }
  });
  std::ifstream in = OpenIn(sidecar_path);
  json sidecar;
  try {
    sidecar = json::parse(in);
    assignment.test_only_properties = sidecar.at("test_only_properties").get<std::set<std::string>>();
    assignment.val_only_properties = sidecar.at("val_only_properties").get<std::set<std::string>>();
    assignment.shared_valtest_properties =
        sidecar.at("shared_valtest_properties").get<std::set<std::string>>();
    for (const auto &d : sidecar.at("dropped_pairs")) {
      assignment.dropped_pairs.push_back({d.at("article_id").get<std::string>(),
                                          {d.at("property").get<std::string>(),
                                           d.at("value").get<std::string>()},
                                          d.at("reason").get<std::string>()});
    }
  } catch (const json::exception &e) {
    throw Error(ErrorCode::kParse, sidecar_path.string() + ": " + e.what());
  }
  return assignment;
}

void WriteMembership(const std::vector<InstanceMembership> &membership,
                     const std::filesystem::path &path) {
  std::ofstream out = OpenOut(path);
  for (const auto &m : membership) {
    out << json{{"article_id", m.article_id}, {"property", m.property}, {"split", SplitName(m.split)}}
               .dump()
        << '\n';
  }
}

std::vector<InstanceMembership> ReadMembership(const std::filesystem::path &path) {
  std::vector<InstanceMembership> out;
  ForEachJsonLine(path, [&](const json &j) {
    out.push_back({j.at("article_id").get<std::string>(), j.at("property").get<std::string>(),
                   ParseSplit(j.at("split").get<std::string>())});
  });
  return out;
}

}  // namespace mpe
