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

// Acceptance criteria checks. Each returns a verdict and a one-line detail.

#ifndef MPE_TESTS_ACCEPTANCE_ACCEPTANCE_H_
#define MPE_TESTS_ACCEPTANCE_ACCEPTANCE_H_

#include <chrono>
#include <filesystem>
#include <string>

namespace mpe::acceptance {

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Settings {
  // The shipped desk configuration.
  std::filesystem::path desk_config;
  // Frozen evaluation report of the desk pipeline.
  std::filesystem::path reference_report;
  // Scratch space for pipeline runs.
  std::filesystem::path work_dir;
};

Verdict MetricOracleEquivalence(const Settings &settings);
Verdict MetricBoundaries(const Settings &settings);
Verdict SplitSoundness(const Settings &settings);
Verdict DiagnosticThresholds(const Settings &settings);
Verdict GradientCorrectness(const Settings &settings);
Verdict ArchitectureContracts(const Settings &settings);
Verdict LearningCapability(const Settings &settings);
Verdict EarlyStoppingAndPruning(const Settings &settings);
Verdict TpeBenchmark(const Settings &settings);
Verdict EndToEndReproducibility(const Settings &settings);

// Runs the shipped desk pipeline in `dir` and returns the evaluation
// report JSON.
std::string RunDeskPipeline(const Settings &settings, const std::filesystem::path &dir);

// Seconds since `start`.
double Elapsed(std::chrono::steady_clock::time_point start);

// Collects failed sub-checks into a detail line.
class Checks {
 public:
  void Expect(bool ok, const std::string &what) {
    if (!ok && failures_++ < 3) detail_ += (detail_.empty() ? "" : "; ") + what;
  }
  bool ok() const { return failures_ == 0; }
  Verdict Finish(const std::string &summary) const {
    if (ok()) return {true, summary};
    return {false, summary + "; " + std::to_string(failures_) + " failed: " + detail_};
  }

 private:
  int failures_ = 0;
  std::string detail_;
};

}  // namespace mpe::acceptance

#endif  // MPE_TESTS_ACCEPTANCE_ACCEPTANCE_H_
