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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <gtest/gtest.h>
#include <json.hpp>

#include "mpe/base/error.h"
#include "mpe/corpus/synthetic.h"
#include "mpe/hpo/objective.h"
#include "mpe/hpo/sampler.h"
#include "mpe/hpo/space.h"
#include "mpe/hpo/study.h"
#include "test_util.h"

namespace mpe {
namespace {

SearchSpace MixedSpace() {
  SearchSpace s;
  s.params = {ParamSpec::Real("x", 0.0, 1.0), ParamSpec::Real("lr", 1e-5, 1e-1, true),
              ParamSpec::Int("layers", 1, 6), ParamSpec::Int("width", 8, 512, true),
              ParamSpec::Categorical("act", {"relu", "gelu", "tanh"})};
  return s;
}

TEST(SearchSpaceTest, DefaultSpaceIsValidAndRoundTrips) {
  const SearchSpace s = DefaultSearchSpace();
  s.Validate();
  EXPECT_EQ(s.params.size(), 15u);
  const SearchSpace back = SearchSpace::FromJson(s.ToJson());
  EXPECT_EQ(back.ToJson(), s.ToJson());
  ASSERT_NE(back.Find("learning_rate"), nullptr);
  EXPECT_EQ(back.Find("learning_rate")->choices.front(), "1e-05");
  EXPECT_EQ(back.Find("encoder_layers")->high, 6.0);
}

TEST(SearchSpaceTest, RejectsMalformedSpaces) {
  SearchSpace s;
  s.params = {ParamSpec::Real("a", 1.0, 0.0)};
  EXPECT_THROW(s.Validate(), Error);
  s.params = {ParamSpec::Real("a", 0.0, 1.0, true)};
  EXPECT_THROW(s.Validate(), Error);
  s.params = {ParamSpec::Categorical("a", {})};
  EXPECT_THROW(s.Validate(), Error);
  s.params = {ParamSpec::Int("a", 1, 2), ParamSpec::Int("a", 1, 2)};
  EXPECT_THROW(s.Validate(), Error);
  EXPECT_THROW(SearchSpace::FromJson(R"({"parameters": [{"name": "a", "type": "bogus"}]})"), Error);
  EXPECT_THROW(SearchSpace::FromJson("{"), Error);
}

TEST(SearchSpaceTest, LoadsSpaceFile) {
  testing_util::TempDir dir;
  const auto path = testing_util::WriteFile(dir.path() / "space.json", R"({"parameters": [
    {"name": "batch_size", "type": "categorical", "choices": [64, 128]},
    {"name": "flag", "type": "categorical", "choices": [true, false]},
    {"name": "lr", "type": "real", "low": 1e-4, "high": 1e-2, "log": true}]})");
  const SearchSpace s = SearchSpace::Load(path);
  ASSERT_EQ(s.params.size(), 3u);
  EXPECT_EQ(s.params[0].choices, (std::vector<std::string>{"64", "128"}));
  EXPECT_EQ(s.params[1].choices, (std::vector<std::string>{"true", "false"}));
  EXPECT_TRUE(s.params[2].log);
  EXPECT_EQ(AsNumber(ParamValue{std::string("128")}), 128.0);
  EXPECT_THROW(AsNumber(ParamValue{std::string("relu")}), Error);
}

TEST(SamplerTest, PriorSamplesStayInsideTheSpace) {
  const SearchSpace s = MixedSpace();
  Rng rng(1);
  int below = 0;
  for (int i = 0; i < 2000; ++i) {
    const Assignment a = SamplePrior(s, rng);
    ASSERT_TRUE(s.Contains(a));
    if (std::get<double>(a.at("lr")) < 1e-3) ++below;
  }
  // Log-uniform over four decades puts half the mass below 1e-3.
  EXPECT_NEAR(below / 2000.0, 0.5, 0.04);
}

TEST(SamplerTest, SuggestionsStayInsideTheSpace) {
  const SearchSpace s = MixedSpace();
  Rng rng(2);
  std::vector<Observation> history;
  for (int i = 0; i < 60; ++i) {
    const Assignment a = SuggestTpe(s, history, {}, rng);
    ASSERT_TRUE(s.Contains(a)) << AssignmentJson(a);
    history.push_back({a, rng.Normal()});
  }
}

TEST(SamplerTest, EmptyHistoryUsesThePrior) {
  const SearchSpace s = DefaultSearchSpace();
  Rng rng(3);
  for (int i = 0; i < 100; ++i) EXPECT_TRUE(s.Contains(SuggestTpe(s, {}, {}, rng)));
}

TEST(SamplerTest, FollowsAMonotoneObjective) {
  SearchSpace s;
  s.params = {ParamSpec::Real("x", 0.0, 1.0)};
  Rng data(4);
  std::vector<Observation> history;
  for (int i = 0; i < 30; ++i) {
    const double x = data.UniformReal();
    history.push_back({{{"x", x}}, x});
  }
  int top_half = 0;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    if (std::get<double>(SuggestTpe(s, history, {}, rng).at("x")) > 0.5) ++top_half;
  }
  EXPECT_GE(top_half, 90);
}

TEST(SamplerTest, FavorsTheWinningChoice) {
  SearchSpace s;
  s.params = {ParamSpec::Categorical("c", {"a", "b", "c", "d"})};
  std::vector<Observation> history;
  const std::vector<std::string> choices = {"a", "b", "c", "d"};
  for (int i = 0; i < 40; ++i) {
    const std::string c = choices[i % 4];
    // "c" wins every time it is tried.
    history.push_back({{{"c", c}}, c == "c" ? 10.0 + i : static_cast<double>(i % 7)});
  }
  std::map<std::string, int> counts;
  Rng rng(5);
  for (int i = 0; i < 100; ++i) ++counts[std::get<std::string>(SuggestTpe(s, history, {}, rng).at("c"))];
  for (const auto &c : {"a", "b", "d"}) EXPECT_GT(counts["c"], counts[c]);
}

TEST(SamplerTest, MinimizeMirrorsMaximize) {
  SearchSpace s;
  s.params = {ParamSpec::Real("x", 0.0, 1.0)};
  std::vector<Observation> history;
  Rng data(6);
  for (int i = 0; i < 30; ++i) {
    const double x = data.UniformReal();
    history.push_back({{{"x", x}}, x});
  }
  TpeOptions options;
  options.direction = Direction::kMinimize;
  int bottom_half = 0;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    if (std::get<double>(SuggestTpe(s, history, options, rng).at("x")) < 0.5) ++bottom_half;
  }
  EXPECT_GE(bottom_half, 90);
}

TEST(SamplerTest, RejectsHistoryOutsideTheSpace) {
  SearchSpace s;
  s.params = {ParamSpec::Real("x", 0.0, 1.0), ParamSpec::Categorical("c", {"a"})};
  std::vector<Observation> history(6, Observation{{{"x", 0.5}, {"c", std::string("a")}}, 1.0});
  Rng rng(1);
  EXPECT_NO_THROW(SuggestTpe(s, history, {}, rng));
  history[0].params["y"] = 1.0;
  EXPECT_THROW(SuggestTpe(s, history, {}, rng), Error);
  history[0].params.erase("y");
  history[0].params["x"] = std::string("wide");
  EXPECT_THROW(SuggestTpe(s, history, {}, rng), Error);
  history[0].params["x"] = 0.5;
  history[0].params["c"] = std::string("z");
  EXPECT_THROW(SuggestTpe(s, history, {}, rng), Error);
}

Trial MakeTrial(int64_t id, TrialStatus status, std::map<int64_t, double> intermediate) {
  Trial t;
  t.id = id;
  t.status = status;
  t.intermediate = std::move(intermediate);
  if (status == TrialStatus::kCompleted) t.value = 0.0;
  return t;
}

TEST(PrunerTest, DisabledUntilFiveTrialsComplete) {
  StudyConfig config;
  std::vector<Trial> trials;
  for (int i = 0; i < 4; ++i) trials.push_back(MakeTrial(i, TrialStatus::kCompleted, {{10, 0.9}}));
  const Trial worst = MakeTrial(9, TrialStatus::kRunning, {{10, 0.0}});
  EXPECT_FALSE(ShouldPrune(worst, 10, trials, config));
  trials.push_back(MakeTrial(4, TrialStatus::kCompleted, {{10, 0.9}}));
  EXPECT_TRUE(ShouldPrune(worst, 10, trials, config));
}

// Ten values 1..10 at one step: the 0.9 quantile sits at position 8.1 of
// the sorted list, i.e. 9.1, so only the trial holding 10 is not below it.
TEST(PrunerTest, OnlyTheBestOfTenSurvives) {
  StudyConfig config;
  std::vector<Trial> trials;
  for (int i = 0; i < 10; ++i) {
    trials.push_back(MakeTrial(i, TrialStatus::kCompleted, {{5, static_cast<double>((i * 7) % 10 + 1)}}));
  }
  int survivors = 0;
  for (const auto &t : trials) {
    const bool pruned = ShouldPrune(t, 5, trials, config);
    if (!pruned) {
      ++survivors;
      EXPECT_EQ(t.intermediate.at(5), 10.0);
    }
  }
  EXPECT_EQ(survivors, 1);
}

TEST(PrunerTest, ValueAtTheQuantileIsKept) {
  StudyConfig config;
  config.pruner_warmup_trials = 0;
  config.pruner_keep_fraction = 0.5;
  std::vector<Trial> trials = {MakeTrial(0, TrialStatus::kCompleted, {{1, 1.0}}),
                               MakeTrial(1, TrialStatus::kCompleted, {{1, 2.0}}),
                               MakeTrial(2, TrialStatus::kCompleted, {{1, 3.0}})};
  // Values {1, 2, 2, 3}: the median is exactly 2.
  EXPECT_FALSE(ShouldPrune(MakeTrial(3, TrialStatus::kRunning, {{1, 2.0}}), 1, trials, config));
  // Values {1, 1.5, 2, 3}: the median is 1.75.
  EXPECT_TRUE(ShouldPrune(MakeTrial(3, TrialStatus::kRunning, {{1, 1.5}}), 1, trials, config));
}

TEST(PrunerTest, NeedsAComparisonAndAValue) {
  StudyConfig config;
  config.pruner_warmup_trials = 0;
  std::vector<Trial> trials = {MakeTrial(0, TrialStatus::kCompleted, {{2, 5.0}})};
  const Trial lone = MakeTrial(1, TrialStatus::kRunning, {{1, 0.0}});
  EXPECT_FALSE(ShouldPrune(lone, 1, trials, config));
  try {
    ShouldPrune(lone, 2, trials, config);
    FAIL() << "expected kNotFound";
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotFound);
  }
}

TEST(PrunerTest, MinimizePrunesHighValues) {
  StudyConfig config;
  config.pruner_warmup_trials = 0;
  config.direction = Direction::kMinimize;
  std::vector<Trial> trials;
  for (int i = 0; i < 5; ++i) trials.push_back(MakeTrial(i, TrialStatus::kCompleted, {{1, 1.0 + i}}));
  EXPECT_FALSE(ShouldPrune(MakeTrial(9, TrialStatus::kRunning, {{1, 0.5}}), 1, trials, config));
  EXPECT_TRUE(ShouldPrune(MakeTrial(9, TrialStatus::kRunning, {{1, 4.5}}), 1, trials, config));
}

TEST(PrunerTest, LoweringKeepFractionNeverUnprunes) {
  Rng rng(7);
  for (int round = 0; round < 200; ++round) {
    std::vector<Trial> trials;
    const int n = 2 + static_cast<int>(rng.Uniform(12));
    for (int i = 0; i < n; ++i) {
      trials.push_back(MakeTrial(i, TrialStatus::kCompleted, {{3, std::round(rng.UniformReal() * 10) / 10}}));
    }
    const Trial &candidate = trials[rng.Uniform(trials.size())];
    StudyConfig hi, lo;
    hi.pruner_warmup_trials = lo.pruner_warmup_trials = 0;
    hi.pruner_keep_fraction = rng.UniformReal(0.05, 1.0);
    lo.pruner_keep_fraction = rng.UniformReal(0.01, hi.pruner_keep_fraction);
    if (ShouldPrune(candidate, 3, trials, hi)) EXPECT_TRUE(ShouldPrune(candidate, 3, trials, lo));
  }
}

TEST(ReporterTest, RecordsBestSoFarAndRequiresIncreasingSteps) {
  Trial t;
  StudyConfig config;
  TrialReporter r(t, {}, config);
  EXPECT_FALSE(r.Report(1, 0.3));
  EXPECT_FALSE(r.Report(2, 0.1));
  EXPECT_FALSE(r.Report(3, 0.5));
  EXPECT_EQ(t.intermediate, (std::map<int64_t, double>{{1, 0.3}, {2, 0.3}, {3, 0.5}}));
  EXPECT_THROW(r.Report(3, 0.9), Error);
}

double Quadratic(const Assignment &a) {
  const double x = std::get<double>(a.at("x"));
  return -(x - 3.0) * (x - 3.0);
}

SearchSpace QuadraticSpace() {
  SearchSpace s;
  s.params = {ParamSpec::Real("x", 0.0, 10.0)};
  return s;
}

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
}

TEST(StudyTest, TpeFindsTheQuadraticOptimumAndBeatsRandomSearch) {
  const Objective objective = [](const Assignment &a, TrialReporter &) { return Quadratic(a); };
  int close = 0;
  std::vector<double> tpe_best, random_best;
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    StudyConfig config;
    config.n_trials = 60;
    config.seed = seed;
    const StudyResult tpe = RunStudy(objective, QuadraticSpace(), config);
    ASSERT_TRUE(tpe.best.has_value());
    const Trial &best = tpe.trials[*tpe.best];
    if (std::abs(std::get<double>(best.params.at("x")) - 3.0) <= 0.3) ++close;
    tpe_best.push_back(*best.value);
    // Random search: the prior for every trial.
    config.startup_trials = config.n_trials;
    const StudyResult random = RunStudy(objective, QuadraticSpace(), config);
    random_best.push_back(*random.trials[*random.best].value);
  }
  EXPECT_GE(close, 9);
  EXPECT_GT(Median(tpe_best), Median(random_best));
}

TEST(StudyTest, FullKeepFractionNeverPrunes) {
  StudyConfig config;
  config.n_trials = 12;
  config.pruner_keep_fraction = 1.0;
  config.pruner_warmup_trials = 0;
  const Objective objective = [](const Assignment &a, TrialReporter &r) {
    for (int step = 1; step <= 5; ++step) {
      if (r.Report(step, Quadratic(a) + step)) return 0.0;
    }
    return Quadratic(a);
  };
  const StudyResult result = RunStudy(objective, QuadraticSpace(), config);
  for (const auto &t : result.trials) EXPECT_EQ(t.status, TrialStatus::kCompleted);
}

TEST(StudyTest, PrunesWeakTrialsAfterWarmup) {
  StudyConfig config;
  config.n_trials = 30;
  const Objective objective = [](const Assignment &a, TrialReporter &r) {
    for (int step = 1; step <= 5; ++step) {
      if (r.Report(step, Quadratic(a))) return Quadratic(a);
    }
    return Quadratic(a);
  };
  const StudyResult result = RunStudy(objective, QuadraticSpace(), config);
  int pruned = 0;
  for (size_t i = 0; i < result.trials.size(); ++i) {
    const Trial &t = result.trials[i];
    if (i < 5) EXPECT_EQ(t.status, TrialStatus::kCompleted);
    if (t.status == TrialStatus::kPruned) {
      ++pruned;
      EXPECT_FALSE(t.value.has_value());
      EXPECT_TRUE(t.pruned_step.has_value());
    }
  }
  EXPECT_GT(pruned, 0);
}

TEST(StudyTest, SingleTrialIsTheBest) {
  StudyConfig config;
  config.n_trials = 1;
  const StudyResult result = RunStudy(
      [](const Assignment &a, TrialReporter &) { return Quadratic(a); }, QuadraticSpace(), config);
  ASSERT_EQ(result.trials.size(), 1u);
  EXPECT_EQ(result.best, std::optional<size_t>(0));
}

TEST(StudyTest, FailedTrialsAreRecordedAndTheStudyContinues) {
  StudyConfig config;
  config.n_trials = 6;
  int calls = 0;
  const StudyResult result = RunStudy(
      [&](const Assignment &a, TrialReporter &) {
        if (++calls % 2 == 0) throw Error(ErrorCode::kNumeric, "diverged");
        return Quadratic(a);
      },
      QuadraticSpace(), config);
  ASSERT_EQ(result.trials.size(), 6u);
  EXPECT_EQ(result.trials[1].status, TrialStatus::kFailed);
  EXPECT_NE(result.trials[1].error.find("diverged"), std::string::npos);
  EXPECT_EQ(result.trials[2].status, TrialStatus::kCompleted);
}

TEST(StudyTest, SameSeedGivesTheSameStudyAndLog) {
  testing_util::TempDir dir;
  StudyConfig config;
  config.n_trials = 25;
  config.seed = 9;
  const Objective objective = [](const Assignment &a, TrialReporter &r) {
    r.Report(1, Quadratic(a));
    return Quadratic(a);
  };
  const auto a = RunStudy(objective, QuadraticSpace(),
                          config, dir.path() / "a.jsonl");
  const auto b = RunStudy(objective, QuadraticSpace(), config, dir.path() / "b.jsonl");
  const std::string log = testing_util::ReadFile(dir.path() / "a.jsonl");
  EXPECT_EQ(log, testing_util::ReadFile(dir.path() / "b.jsonl"));
  size_t lines = 0;
  std::istringstream in(log);
  for (std::string line; std::getline(in, line); ++lines) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("trial").get<int64_t>(), static_cast<int64_t>(lines));
    EXPECT_EQ(line, TrialJson(a.trials[lines]));
  }
  EXPECT_EQ(lines, 25u);
}

TEST(StudyTest, RejectsBadConfig) {
  StudyConfig config;
  config.gamma = 1.0;
  EXPECT_THROW(config.Validate(), Error);
  config = StudyConfig();
  config.pruner_keep_fraction = 0.0;
  EXPECT_THROW(config.Validate(), Error);
  EXPECT_EQ(StudyConfig().n_trials, 250);
}

TEST(ObjectiveTest, AppliesDefaultSpaceAssignments) {
  Rng rng(3);
  const SearchSpace s = DefaultSearchSpace();
  for (int i = 0; i < 50; ++i) {
    const Assignment a = SamplePrior(s, rng);
    ModelConfig model;
    TrainConfig train;
    ApplyAssignment(a, model, train);
    EXPECT_EQ(model.embedding_dim, static_cast<int>(AsNumber(a.at("embedding_dim"))));
    EXPECT_EQ(train.batch_size, static_cast<int>(AsNumber(a.at("batch_size"))));
    EXPECT_EQ(model.tie_all_embeddings, AsString(a.at("tie_all_embeddings")) == "true");
  }
  ModelConfig model;
  TrainConfig train;
  EXPECT_THROW(ApplyAssignment({{"bogus", 1.0}}, model, train), Error);
}

TEST(ObjectiveTest, StudyOverTrainingRuns) {
  GeneratorConfig g;
  g.article_count = 24;
  g.property_count = 6;
  g.mean_pairs_per_record = 2.0;
  g.max_properties_per_record = 3;
  g.mean_article_words = 10;
  const Corpus corpus = GenerateSynthetic(g, 3).records;
  const Corpus train(corpus.begin(), corpus.begin() + 16), validation(corpus.begin() + 16, corpus.end());
  const Vocabulary vocab = Vocabulary::Train(TokenizerTrainingTexts(corpus), 200, 1);
  TrainingTask task{&vocab, &train, &validation, {}, {}, 1};
  task.model.embedding_dim = 8;
  task.model.ffn_dim = 8;
  task.model.attention_heads = 2;
  task.model.encoder_layers = task.model.decoder_layers = 1;
  task.model.max_target_len = 24;
  task.train_config.batch_size = 4;
  task.train_config.max_steps = 6;
  task.train_config.validate_every = 3;
  SearchSpace s;
  s.params = {ParamSpec::Categorical("learning_rate", {"0.001", "0.01"}),
              ParamSpec::Int("decoder_layers", 1, 2)};
  StudyConfig config;
  config.n_trials = 3;
  const StudyResult result = RunStudy(MakeTrainingObjective(task), s, config);
  ASSERT_EQ(result.trials.size(), 3u);
  for (const auto &t : result.trials) {
    EXPECT_EQ(t.status, TrialStatus::kCompleted) << t.error;
    EXPECT_EQ(t.intermediate.size(), 2u);
  }
}

}  // namespace
}  // namespace mpe
