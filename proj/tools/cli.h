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

// Command-line front end: one subcommand per pipeline stage.
//
//   gen        synthetic corpus
//   merge      single-property streams -> MPE records
//   split      controlled or random instance split
//   audit      leakage audit of a split
//   diagnose   diagnostic subset labels and shares
//   tokenize   subword vocabulary
//   train      model training with early stopping
//   evaluate   metric report from predictions or a model
//   hpo        hyperparameter study
//
// Every run writes <command>.manifest.json next to its outputs.

#ifndef MPE_TOOLS_CLI_H_
#define MPE_TOOLS_CLI_H_

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace mpe {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntimeError = 1;
inline constexpr int kExitUsageError = 2;

inline constexpr const char *kToolVersion = "1.0.0";

struct RunManifest {
  std::string command;
  // Resolved option values, keyed by long flag name.
  std::string config_json = "{}";
  std::vector<std::filesystem::path> inputs;
  uint64_t seed = 0;
  std::vector<std::filesystem::path> outputs;
  double wall_seconds = 0.0;

  // Digests are computed from the files as they are when this is called.
  std::string ToJson() const;
};

// Runs one invocation; `args` excludes the program name. Errors are
// reported on `err` as one line, "error: <category>: <message>".
int RunCli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

// Keeps freed tensor buffers in the heap for reuse. Call once at startup.
void TuneAllocator();

}  // namespace mpe

#endif  // MPE_TOOLS_CLI_H_
