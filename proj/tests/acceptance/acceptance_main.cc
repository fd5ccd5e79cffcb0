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

// Runs the acceptance criteria and prints one PASS/FAIL line per criterion.
//
//   acceptance [--criterion N ...] [--desk-config FILE] [--reference FILE]
//              [--freeze-reference FILE]

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <vector>

#include <CLI11.hpp>

#include "acceptance.h"
#include "cli.h"
#include "test_util.h"

namespace {

using mpe::acceptance::Settings;
using mpe::acceptance::Verdict;

struct Criterion {
  int number;
  const char *name;
  Verdict (*check)(const Settings &);
};

constexpr Criterion kCriteria[] = {
    {1, "metric oracle equivalence", mpe::acceptance::MetricOracleEquivalence},
    {2, "metric boundary suite", mpe::acceptance::MetricBoundaries},
    {3, "split soundness", mpe::acceptance::SplitSoundness},
    {4, "diagnostics", mpe::acceptance::DiagnosticThresholds},
    {5, "gradient correctness", mpe::acceptance::GradientCorrectness},
    {6, "architecture contracts", mpe::acceptance::ArchitectureContracts},
    {7, "learning capability", mpe::acceptance::LearningCapability},
    {8, "early stopping and pruning", mpe::acceptance::EarlyStoppingAndPruning},
    {9, "TPE benchmark", mpe::acceptance::TpeBenchmark},
    {10, "end-to-end reproducibility", mpe::acceptance::EndToEndReproducibility},
};

}  // namespace

int main(int argc, char **argv) {
  mpe::TuneAllocator();
  CLI::App app("Acceptance criteria");
  std::vector<int> selected;
  Settings settings;
  settings.desk_config = MPE_DESK_CONFIG;
  settings.reference_report = MPE_REFERENCE_REPORT;
  std::string freeze;
  app.add_option("--criterion", selected, "Criteria to run (default: all)")
      ->check(CLI::Range(1, 10));
  app.add_option("--desk-config", settings.desk_config, "Desk pipeline configuration");
  app.add_option("--reference", settings.reference_report, "Frozen desk evaluation report");
  app.add_option("--freeze-reference", freeze,
                 "Run the desk pipeline and write its report here, then exit");
  CLI11_PARSE(app, argc, argv);

  mpe::testing_util::TempDir work;
  settings.work_dir = work.path();
  if (!freeze.empty()) {
    std::ofstream(freeze, std::ios::binary) << mpe::acceptance::RunDeskPipeline(settings, work.path());
    std::cout << "wrote " << freeze << "\n";
    return 0;
  }
  int failed = 0;
  for (const Criterion &c : kCriteria) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.number) == selected.end()) {
      continue;
    }
    Verdict v;
    try {
      v = c.check(settings);
    } catch (const std::exception &e) {
      v = {false, std::string("error: ") + e.what()};
    }
    if (!v.pass) ++failed;
    std::printf("criterion %2d %s: %s: %s\n", c.number, v.pass ? "PASS" : "FAIL", c.name,
                v.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
