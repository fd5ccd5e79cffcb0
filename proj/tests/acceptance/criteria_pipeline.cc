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

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "acceptance.h"
#include "cli.h"
#include "mpe/metrics/metrics.h"

namespace mpe::acceptance {
namespace {

namespace fs = std::filesystem;

void Cli(const std::vector<std::string> &args) {
  std::ostringstream out, err;
  if (RunCli(args, out, err) != kExitOk) throw std::runtime_error("mpe failed: " + err.str());
}

std::string ReadAll(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

std::string RunDeskPipeline(const Settings &s, const fs::path &dir) {
  const std::string config = s.desk_config.string();
  auto at = [&](const std::string &name) { return (dir / name).string(); };
  Cli({"--config", config, "gen", "--out-dir", at("gen")});
  Cli({"--config", config, "split", "--input", at("gen/corpus.jsonl"), "--out-dir", at("split")});
  Cli({"--config", config, "tokenize", "--input", at("split/train.jsonl"), "--out-dir", at("vocab")});
  Cli({"--config", config, "train", "--train", at("split/train.jsonl"), "--validation",
       at("split/validation.jsonl"), "--vocab", at("vocab/vocab.txt"), "--out-dir", at("model")});
  Cli({"--config", config, "diagnose", "--train", at("split/train.jsonl"), "--input",
       at("split/test.jsonl"), "--out-dir", at("diagnose")});
  Cli({"--config", config, "evaluate", "--input", at("split/test.jsonl"), "--model",
       at("model/model.ckpt"), "--vocab", at("vocab/vocab.txt"), "--labels",
       at("diagnose/labels.jsonl"), "--out-dir", at("evaluate")});
  return ReadAll(dir / "evaluate" / "report.json");
}

Verdict EndToEndReproducibility(const Settings &s) {
  const auto start = std::chrono::steady_clock::now();
  const MetricReport reference = MetricReportFromJson(ReadAll(s.reference_report));
  const MetricReport report = MetricReportFromJson(RunDeskPipeline(s, s.work_dir / "desk"));
  const double gap = 100.0 * std::abs(report.mmp_f1 - reference.mmp_f1);
  Checks c;
  c.Expect(gap <= 0.5, "MMP-F1 differs from the reference by more than 0.5 points");
  c.Expect(report.n_articles == reference.n_articles, "article count differs from the reference");
  char line[200];
  std::snprintf(line, sizeof(line),
                "MMP-F1 %.2f vs reference %.2f (gap %.2f points), Mean-F1 %.2f vs %.2f; %.0f s",
                100.0 * report.mmp_f1, 100.0 * reference.mmp_f1, gap, 100.0 * report.mean_f1,
                100.0 * reference.mean_f1, Elapsed(start));
  return c.Finish(line);
}

}  // namespace mpe::acceptance
