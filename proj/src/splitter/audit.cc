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

#include <cstdio>
#include <json.hpp>
#include <unordered_map>
#include <unordered_set>

#include "mpe/base/error.h"
#include "mpe/splitter/split.h"

namespace mpe {
namespace {

struct Instance {
  const std::string *article_id;
  const std::string *property;
  Split split;
};

AuditReport Audit(const Corpus &corpus, const std::vector<Instance> &instances,
                  const SplitAssignment *heldout) {
  AuditReport report;
  std::set<std::string> inventory;
  for (const auto &record : corpus) {
    for (const auto &pair : record.pairs) inventory.insert(pair.property);
  }
  report.property_inventory = inventory.size();

  std::array<std::unordered_set<std::string>, 3> articles;
  for (const auto &inst : instances) {
    const int s = static_cast<int>(inst.split);
    articles[s].insert(*inst.article_id);
    ++report.instances[s];
    report.properties[s].insert(*inst.property);
    if (heldout) {
      const bool test_only = heldout->test_only_properties.count(*inst.property) > 0;
      const bool val_only = heldout->val_only_properties.count(*inst.property) > 0;
      const bool shared = heldout->shared_valtest_properties.count(*inst.property) > 0;
      if ((inst.split == Split::kTrain && (test_only || val_only || shared)) ||
          (inst.split == Split::kValidation && test_only) ||
          (inst.split == Split::kTest && val_only)) {
        ++report.heldout_violations;
      }
    }
  }
  for (int s = 0; s < 3; ++s) report.articles[s] = articles[s].size();

  constexpr std::array<std::pair<Split, Split>, 3> kPairs = {
      std::pair{Split::kTrain, Split::kValidation},
      std::pair{Split::kTrain, Split::kTest},
      std::pair{Split::kValidation, Split::kTest}};
  for (const auto &[source, target] : kPairs) {
    OverlapStat stat;
    stat.source = source;
    stat.target = target;
    const auto &src = articles[static_cast<int>(source)];
    const auto &dst = articles[static_cast<int>(target)];
    for (const auto &id : dst) stat.article_overlap_count += src.count(id);
    stat.target_articles = dst.size();
    stat.article_overlap_percent =
        dst.empty() ? 0.0
                    : 100.0 * static_cast<double>(stat.article_overlap_count) /
                          static_cast<double>(dst.size());
    for (const auto &inst : instances) {
      if (inst.split != target) continue;
      ++stat.target_instances;
      stat.leaked_instances += src.count(*inst.article_id);
    }
    report.overlaps.push_back(stat);
  }

  const auto &train = report.properties[static_cast<int>(Split::kTrain)];
  for (const auto &p : inventory) report.unseen_in_train_count += train.count(p) == 0;
  report.unseen_in_train_fraction =
      inventory.empty() ? 0.0
                        : static_cast<double>(report.unseen_in_train_count) /
                              static_cast<double>(inventory.size());
  return report;
}

}  // namespace

AuditReport AuditSplit(const Corpus &corpus, const SplitAssignment &assignment) {
  std::map<std::string, std::set<PropertyValuePair>> dropped;
  for (const auto &d : assignment.dropped_pairs) dropped[d.article_id].insert(d.pair);
  std::vector<Instance> instances;
  for (const auto &record : corpus) {
    auto it = assignment.split_of.find(record.article_id);
    if (it == assignment.split_of.end()) {
      throw Error(ErrorCode::kNotFound,
                  "article '" + record.article_id + "' missing from split assignment");
    }
    auto d = dropped.find(record.article_id);
    std::set<std::string> seen;
    for (const auto &pair : record.pairs) {
      if (d != dropped.end() && d->second.count(pair)) continue;
      if (!seen.insert(pair.property).second) continue;
      instances.push_back({&record.article_id, &pair.property, it->second});
    }
  }
  return Audit(corpus, instances, &assignment);
}

AuditReport AuditMembership(const Corpus &corpus,
                            const std::vector<InstanceMembership> &membership) {
  std::unordered_set<std::string> covered;
  for (const auto &m : membership) covered.insert(m.article_id);
  for (const auto &record : corpus) {
    if (!covered.count(record.article_id)) {
      throw Error(ErrorCode::kNotFound,
                  "article '" + record.article_id + "' missing from split membership");
    }
  }
  std::vector<Instance> instances;
  instances.reserve(membership.size());
  for (const auto &m : membership) instances.push_back({&m.article_id, &m.property, m.split});
  return Audit(corpus, instances, nullptr);
}

std::string FormatAuditTable(const AuditReport &report) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-22s %10s %10s %8s %12s\n", "Split pair", "Size",
                "In source", "%", "Leaked inst.");
  out += line;
  for (const auto &o : report.overlaps) {
    std::string name = std::string(SplitName(o.source)) + " -> " + SplitName(o.target);
    std::snprintf(line, sizeof(line), "%-22s %10zu %10zu %8.2f %12zu\n", name.c_str(),
                  o.target_articles, o.article_overlap_count, o.article_overlap_percent,
                  o.leaked_instances);
    out += line;
  }
  std::snprintf(line, sizeof(line), "%-22s %10s %10s %10s\n", "Split", "Articles", "Instances",
                "Properties");
  out += "\n";
  out += line;
  for (Split s : {Split::kTrain, Split::kValidation, Split::kTest}) {
    const int i = static_cast<int>(s);
    std::snprintf(line, sizeof(line), "%-22s %10zu %10zu %10zu\n", SplitName(s),
                  report.articles[i], report.instances[i], report.properties[i].size());
    out += line;
  }
  std::snprintf(line, sizeof(line),
                "\nUnseen in train: %zu of %zu properties (%.2f%%); held-out violations: %zu\n",
                report.unseen_in_train_count, report.property_inventory,
                100.0 * report.unseen_in_train_fraction, report.heldout_violations);
  out += line;
  return out;
}

std::string AuditReportJson(const AuditReport &report) {
  using nlohmann::json;
  json j;
  json overlaps = json::array();
  for (const auto &o : report.overlaps) {
    overlaps.push_back({{"source", SplitName(o.source)},
                        {"target", SplitName(o.target)},
                        {"article_overlap_count", o.article_overlap_count},
                        {"target_articles", o.target_articles},
                        {"article_overlap_percent", o.article_overlap_percent},
                        {"leaked_instances", o.leaked_instances},
                        {"target_instances", o.target_instances}});
  }
  j["overlaps"] = std::move(overlaps);
  for (Split s : {Split::kTrain, Split::kValidation, Split::kTest}) {
    const int i = static_cast<int>(s);
    j["splits"][SplitName(s)] = {{"articles", report.articles[i]},
                                 {"instances", report.instances[i]},
                                 {"properties", report.properties[i]}};
  }
  j["property_inventory"] = report.property_inventory;
  j["unseen_in_train_count"] = report.unseen_in_train_count;
  j["unseen_in_train_fraction"] = report.unseen_in_train_fraction;
  j["heldout_violations"] = report.heldout_violations;
  return j.dump(2);
}

}  // namespace mpe
