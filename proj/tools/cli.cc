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

#include "cli.h"

#include <malloc.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mpe/base/digest.h"
#include "mpe/base/error.h"
#include "mpe/corpus/record.h"
#include "mpe/corpus/stats.h"
#include "mpe/corpus/synthetic.h"
#include "mpe/diagnostics/diagnostics.h"
#include "mpe/hpo/objective.h"
#include "mpe/hpo/space.h"
#include "mpe/hpo/study.h"
#include "mpe/metrics/metrics.h"
#include "mpe/models/config.h"
#include "mpe/models/decode.h"
#include "mpe/models/model.h"
#include "mpe/models/trainer.h"
#include "mpe/splitter/split.h"
#include "mpe/tokenizer/tokenizer.h"

namespace mpe {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

// Raised for bad invocations detected after parsing; exits with
// kExitUsageError.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Runs `check` and reports kInvalidArgument as a usage error.
void CheckUsage(const std::function<void()> &check) {
  try {
    check();
  } catch (const Error &e) {
    if (e.code() != ErrorCode::kInvalidArgument) throw;
    throw UsageError(e.what());
  }
}

std::string OneLine(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\r', ' ');
  return s;
}

struct GlobalOptions {
  uint64_t seed = 1;
  std::string out_dir = ".";
  bool case_insensitive = false;

  NormalizationPolicy policy() const { return {case_insensitive}; }
};

// Collects the files a command reads and writes. Outputs go to the output
// directory under fixed names; an output that would overwrite an input is
// refused before anything is written.
class Run {
 public:
  Run(std::string command, const GlobalOptions &global, std::string config_json)
      : global_(global), start_(std::chrono::steady_clock::now()) {
    manifest_.command = std::move(command);
    manifest_.seed = global.seed;
    manifest_.config_json = std::move(config_json);
  }

  void Input(const fs::path &path) {
    auto &in = manifest_.inputs;
    if (std::find(in.begin(), in.end(), path) == in.end()) in.push_back(path);
  }

  // Declares an output and returns its path. Call before writing anything.
  fs::path Output(const std::string &name) {
    const fs::path path = fs::path(global_.out_dir) / name;
    for (const auto &in : manifest_.inputs) {
      std::error_code ec;
      if (fs::exists(path) && fs::equivalent(in, path, ec)) {
        throw UsageError("output " + path.string() + " would overwrite an input");
      }
    }
    manifest_.outputs.push_back(path);
    return path;
  }

  void CreateOutputDir() const {
    std::error_code ec;
    fs::create_directories(global_.out_dir, ec);
    if (ec) throw Error(ErrorCode::kIo, "cannot create " + global_.out_dir + ": " + ec.message());
  }

  void Finish() {
    manifest_.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    const fs::path path = fs::path(global_.out_dir) / (manifest_.command + ".manifest.json");
    std::ofstream out(path, std::ios::binary);
    out << manifest_.ToJson() << "\n";
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  }

 private:
  const GlobalOptions &global_;
  RunManifest manifest_;
  std::chrono::steady_clock::time_point start_;
};

void WriteText(const fs::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
}

// Option values as resolved after flags and the config file, for the
// manifest. Flags read as "true"/"false", everything else as given.
json ResolvedOptions(const CLI::App &app) {
  json j = json::object();
  for (const CLI::Option *opt : app.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config" || name == "version") continue;
    const auto &results = opt->results();
    if (opt->get_expected_max() == 0) {
      j[name] = opt->count() > 0 ? "true" : "false";
    } else if (opt->count() == 0) {
      j[name] = opt->get_default_str();
    } else if (opt->get_expected_max() > 1) {
      j[name] = results;
    } else {
      j[name] = results.empty() ? "" : results.back();
    }
  }
  return j;
}

std::string ConfigJson(const CLI::App &root, const CLI::App &sub) {
  return json{{"global", ResolvedOptions(root)}, {sub.get_name(), ResolvedOptions(sub)}}.dump();
}

// ---- gen ----

struct GenOptions {
  GeneratorConfig config;
};

void AddGen(CLI::App &app, GenOptions &o) {
  GeneratorConfig &c = o.config;
  app.add_option("--articles", c.article_count, "Number of articles");
  app.add_option("--properties", c.property_count, "Size of the property inventory");
  app.add_option("--mean-pairs", c.mean_pairs_per_record, "Mean pairs per record");
  app.add_option("--max-properties", c.max_properties_per_record, "Most properties per record");
  app.add_option("--categorical-fraction", c.categorical_fraction,
                 "Share of properties drawing from small skewed pools");
  app.add_option("--categorical-pool", c.categorical_pool_size, "Values per categorical property");
  app.add_option("--relational-pool", c.relational_pool_size, "Values per relational property");
  app.add_option("--value-in-text", c.value_in_text_probability,
                 "Probability a value is written verbatim");
  app.add_option("--multi-value", c.multi_value_probability,
                 "Probability a relational property has two values");
  app.add_option("--zipf", c.property_zipf_exponent, "Zipf exponent of property popularity");
  app.add_option("--mean-words", c.mean_article_words, "Mean article length in words");
  app.add_option("--length-sigma", c.article_length_sigma, "Log-normal spread of lengths");
  app.add_option("--correlation-rate", c.correlation_rate,
                 "Probability a correlated dependent property is added");
  app.add_option("--answer-redundancy", c.answer_redundancy,
                 "Probability a correlated answer is still stated");
}

void RunGen(const GenOptions &o, Run &run, const GlobalOptions &g, std::ostream &out) {
  const SyntheticCorpus corpus = GenerateSynthetic(o.config, g.seed);
  const fs::path corpus_path = run.Output("corpus.jsonl");
  const fs::path meta_path = run.Output("metadata.jsonl");
  run.CreateOutputDir();
  WriteRecords(corpus_path, corpus.records);
  WriteText(meta_path, SyntheticMetadataJsonLines(corpus));
  const CorpusStats stats = ComputeCorpusStats(corpus.records);
  out << "articles " << stats.article_count << " pairs " << stats.pair_count << " properties "
      << stats.property_frequency.size() << "\n";
}

// ---- merge ----

struct MergeOptions {
  std::vector<std::string> inputs;
};

void AddMerge(CLI::App &app, MergeOptions &o) {
  app.add_option("--input", o.inputs,
                 "Single-property record streams: one property per line, articles may repeat")
      ->required()
      ->check(CLI::ExistingFile);
}

std::vector<SinglePropertyRecord> ReadSingleRecords(const fs::path &path,
                                                    const NormalizationPolicy &policy) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::vector<SinglePropertyRecord> out;
  std::string line;
  for (size_t number = 1; std::getline(in, line); ++number) {
    const std::string where = path.string() + ":" + std::to_string(number);
    MpeRecord r;
    try {
      r = ParseRecordLine(line, policy);
    } catch (const Error &e) {
      throw Error(e.code(), where + ": " + e.what());
    }
    SinglePropertyRecord s{r.article_id, r.text, r.pairs.front().property, {}};
    for (const auto &p : r.pairs) {
      if (p.property != s.property) {
        throw Error(ErrorCode::kParse, where + ": a single-property record has one property");
      }
      s.values.push_back(p.value);
    }
    out.push_back(std::move(s));
  }
  return out;
}

void RunMerge(const MergeOptions &o, Run &run, const GlobalOptions &g, std::ostream &out) {
  std::vector<SinglePropertyRecord> singles;
  for (const auto &path : o.inputs) {
    run.Input(path);
    auto part = ReadSingleRecords(path, g.policy());
    singles.insert(singles.end(), part.begin(), part.end());
  }
  const Corpus merged = MergeSingleToMpe(singles);
  const fs::path path = run.Output("corpus.jsonl");
  run.CreateOutputDir();
  WriteRecords(path, merged);
  out << "single records " << singles.size() << " articles " << merged.size() << "\n";
}

// ---- split ----

struct SplitOptions {
  std::string input;
  std::string mode = "controlled";
  SplitConfig config;
  // Unset means the desk-scale rule for the corpus size.
  std::optional<size_t> seen_articles;
  std::optional<size_t> max_eval_articles;
  double validation_fraction = 0.1;
  double test_fraction = 0.1;
};

void AddSplit(CLI::App &app, SplitOptions &o) {
  app.add_option("--input", o.input, "Corpus to split")->required()->check(CLI::ExistingFile);
  app.add_option("--mode", o.mode, "controlled (article-level) or random (instance-level)")
      ->check(CLI::IsMember({"controlled", "random"}));
  app.add_option("--test-only-fraction", o.config.test_only_property_fraction,
                 "Share of properties held out for test");
  app.add_option("--val-only-fraction", o.config.val_only_property_fraction,
                 "Share of properties held out for validation");
  app.add_option("--shared-fraction", o.config.shared_valtest_property_fraction,
                 "Share of properties held out for validation and test");
  app.add_option("--seen-articles", o.seen_articles,
                 "Seen-property articles added per evaluation split (default: 5% of corpus)");
  app.add_option("--max-eval-articles", o.max_eval_articles,
                 "Cap on evaluation split articles (default: 40% of corpus)");
  app.add_option("--validation-fraction", o.validation_fraction,
                 "Random mode: instance share for validation");
  app.add_option("--test-fraction", o.test_fraction, "Random mode: instance share for test");
}

void RunSplit(const SplitOptions &o, Run &run, const GlobalOptions &g, std::ostream &out) {
  run.Input(o.input);
  const Corpus corpus = LoadRecords(o.input, g.policy());
  if (o.mode == "random") {
    const auto membership =
        RandomInstanceSplit(corpus, o.validation_fraction, o.test_fraction, g.seed);
    const fs::path path = run.Output("membership.jsonl");
    run.CreateOutputDir();
    WriteMembership(membership, path);
    out << FormatAuditTable(AuditMembership(corpus, membership));
    return;
  }
  SplitConfig config = o.config;
  const SplitConfig scaled = SplitConfig::ScaledTo(corpus.size());
  config.seen_articles_per_eval_split = o.seen_articles.value_or(scaled.seen_articles_per_eval_split);
  config.max_eval_split_articles = o.max_eval_articles.value_or(scaled.max_eval_split_articles);
  config.seed = g.seed;
  const SplitAssignment assignment = ControlledSplit(corpus, config);
  const SplitCorpora parts = ApplySplit(corpus, assignment);
  const fs::path assignment_path = run.Output("assignment.jsonl");
  const fs::path sidecar_path = run.Output("split_sidecar.json");
  std::array<fs::path, 3> part_paths;
  for (Split s : {Split::kTrain, Split::kValidation, Split::kTest}) {
    part_paths[static_cast<size_t>(s)] = run.Output(std::string(SplitName(s)) + ".jsonl");
  }
  run.CreateOutputDir();
  WriteAssignment(assignment, assignment_path, sidecar_path);
  for (Split s : {Split::kTrain, Split::kValidation, Split::kTest}) {
    WriteRecords(part_paths[static_cast<size_t>(s)], parts.of(s));
  }
  out << FormatAuditTable(AuditSplit(corpus, assignment));
}

// ---- audit ----

struct AuditOptions {
  std::string input;
  std::string assignment;
  std::string sidecar;
  std::string membership;
};

void AddAudit(CLI::App &app, AuditOptions &o) {
  app.add_option("--input", o.input, "Corpus the split was made from")
      ->required()
      ->check(CLI::ExistingFile);
  auto *a = app.add_option("--assignment", o.assignment, "Article assignment file")
                ->check(CLI::ExistingFile);
  auto *s = app.add_option("--sidecar", o.sidecar, "Held-out property sidecar")
                ->check(CLI::ExistingFile);
  auto *m = app.add_option("--membership", o.membership, "Instance membership file")
                ->check(CLI::ExistingFile);
  a->needs(s);
  s->needs(a);
  m->excludes(a)->excludes(s);
}

void RunAudit(const AuditOptions &o, Run &run, const GlobalOptions &g, std::ostream &out) {
  if (o.assignment.empty() == o.membership.empty()) {
    throw UsageError("give either --assignment with --sidecar, or --membership");
  }
  run.Input(o.input);
  const Corpus corpus = LoadRecords(o.input, g.policy());
  AuditReport report;
  if (!o.membership.empty()) {
    run.Input(o.membership);
    report = AuditMembership(corpus, ReadMembership(o.membership));
  } else {
    run.Input(o.assignment);
    run.Input(o.sidecar);
    report = AuditSplit(corpus, ReadAssignment(o.assignment, o.sidecar));
  }
  const fs::path path = run.Output("audit.json");
  run.CreateOutputDir();
  WriteText(path, AuditReportJson(report) + "\n");
  out << FormatAuditTable(report);
}

// ---- diagnose ----

struct DiagnoseOptions {
  std::string train;
  std::string input;
  DiagnosticThresholds thresholds;
  std::string frequency = "instances";
};

void AddDiagnose(CLI::App &app, DiagnoseOptions &o) {
  app.add_option("--train", o.train, "Training split; frequencies and entropies come from it")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--input", o.input, "Split to label")->required()->check(CLI::ExistingFile);
  app.add_option("--rare-max", o.thresholds.rare_max, "Rare means train frequency below this");
  app.add_option("--entropy-threshold", o.thresholds.entropy_threshold,
                 "Categorical means normalized entropy below this");
  auto *words = app.add_option("--long-words", o.thresholds.long_words,
                               "Long article: more words than this (default 695)");
  auto *pct = app.add_option("--long-percentile", o.thresholds.long_percentile,
                             "Long article: above this percentile of train lengths");
  words->excludes(pct);
  app.add_option("--frequency", o.frequency, "Count train frequency per instances or articles")
      ->check(CLI::IsMember({"instances", "articles"}));
}

void RunDiagnose(const DiagnoseOptions &o, Run &run, const GlobalOptions &g, std::ostream &out) {
  CheckUsage([&] { o.thresholds.Validate(); });
  run.Input(o.train);
  run.Input(o.input);
  const Corpus train = LoadRecords(o.train, g.policy());
  const Corpus split = LoadRecords(o.input, g.policy());
  const PropertyStats stats = ComputePropertyStats(
      train, o.frequency == "articles" ? FrequencyCounting::kArticles : FrequencyCounting::kInstances);
  const size_t long_words = ResolveLongWords(o.thresholds, train);
  const DiagnosticLabels labels = LabelInstances(split, stats, o.thresholds, long_words, g.policy());
  const SubsetReport report = ComputeSubsetReport(split, labels);
  const fs::path labels_path = run.Output("labels.jsonl");
  const fs::path report_path = run.Output("subsets.json");
  run.CreateOutputDir();
  WriteLabels(labels, labels_path);
  WriteText(report_path, SubsetReportJson(report) + "\n");
  out << "long-article threshold " << long_words << " words\n" << FormatSubsetTable(report);
}

// ---- tokenize ----

struct TokenizeOptions {
  std::vector<std::string> inputs;
  int vocab_size = kDefaultVocabSize;
  size_t max_training_texts = 0;
};

void AddTokenize(CLI::App &app, TokenizeOptions &o) {
  app.add_option("--input", o.inputs, "Corpora to learn pieces from (normally the train split)")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--vocab-size", o.vocab_size, "Vocabulary size including specials");
  app.add_option("--max-training-texts", o.max_training_texts,
                 "Seeded sample of texts to learn from; 0 uses all");
}

void RunTokenize(const TokenizeOptions &o, Run &run, const GlobalOptions &g, std::ostream &out) {
  Corpus corpus;
  for (const auto &path : o.inputs) {
    run.Input(path);
    const Corpus part = LoadRecords(path, g.policy());
    corpus.insert(corpus.end(), part.begin(), part.end());
  }
  const auto texts = TokenizerTrainingTexts(corpus);
  const Vocabulary vocab = Vocabulary::Train(texts, o.vocab_size, g.seed, o.max_training_texts);
  const fs::path path = run.Output("vocab.txt");
  run.CreateOutputDir();
  vocab.Save(path);
  size_t article_tokens = 0;
  for (const auto &r : corpus) article_tokens += vocab.Encode(r.text, SIZE_MAX).size();
  char line[128];
  std::snprintf(line, sizeof(line), "vocabulary %d pieces, %.1f tokens per article\n", vocab.size(),
                corpus.empty() ? 0.0 : static_cast<double>(article_tokens) / corpus.size());
  out << line;
}

// ---- train / hpo shared model options ----

struct ModelOptions {
  ModelConfig model;
  TrainConfig train;
  std::string architecture = ArchitectureName(ModelConfig().architecture);
  std::string activation = "relu";
  std::string positional = "sinusoidal";
  std::string cross_order = "properties_then_article";
  std::string schedule = "constant";

  // Model and training configs with enum names applied, validated.
  std::pair<ModelConfig, TrainConfig> Resolve(uint64_t seed) const {
    std::pair<ModelConfig, TrainConfig> out;
    CheckUsage([&] {
      json m = json::parse(model.ToJson());
      m["architecture"] = architecture;
      m["activation"] = activation;
      m["positional"] = positional;
      m["cross_attention_order"] = cross_order;
      out.first = ModelConfig::FromJson(m.dump());
      json t = json::parse(train.ToJson());
      t["schedule"] = schedule;
      t["seed"] = seed;
      out.second = TrainConfig::FromJson(t.dump());
    });
    return out;
  }
};

void AddModelOptions(CLI::App &app, ModelOptions &o) {
  ModelConfig &m = o.model;
  TrainConfig &t = o.train;
  app.add_option("--arch", o.architecture, "Architecture")
      ->check(CLI::IsMember({"seq2seq", "transformer", "dual_source"}));
  app.add_option("--encoder-layers", m.encoder_layers, "Encoder layers");
  app.add_option("--decoder-layers", m.decoder_layers, "Decoder layers");
  app.add_option("--embedding-dim", m.embedding_dim, "Model width");
  app.add_option("--ffn-dim", m.ffn_dim, "Feed-forward width");
  app.add_option("--attention-heads", m.attention_heads, "Attention heads");
  app.add_option("--activation", o.activation, "Feed-forward activation")
      ->check(CLI::IsMember({"relu", "gelu"}));
  app.add_option("--positional", o.positional, "Position encoding")
      ->check(CLI::IsMember({"sinusoidal", "learned", "none"}));
  app.add_option("--hidden-dropout", m.hidden_dropout, "Dropout on residual branches");
  app.add_option("--attention-dropout", m.attention_dropout, "Dropout on attention weights");
  app.add_option("--activation-dropout", m.activation_dropout, "Dropout after the activation");
  app.add_option("--tie-embeddings", m.tie_all_embeddings, "Share all embeddings and the output layer");
  app.add_option("--max-source-len", m.max_source_len, "Source tokens kept per encoder input");
  app.add_option("--max-target-len", m.max_target_len, "Longest generated target");
  app.add_option("--max-positions", m.max_positions, "Learned position table size");
  app.add_option("--cross-attention-order", o.cross_order, "Dual-source cross-attention order")
      ->check(CLI::IsMember({"properties_then_article", "article_then_properties"}));
  app.add_option("--batch-size", t.batch_size, "Examples per update");
  app.add_option("--learning-rate", t.optimizer.learning_rate, "Peak learning rate");
  app.add_option("--schedule", o.schedule, "Learning-rate schedule")
      ->check(CLI::IsMember({"constant", "inverse_sqrt", "linear"}));
  app.add_option("--warmup-steps", t.optimizer.warmup_steps, "Linear warmup steps");
  app.add_option("--weight-decay", t.optimizer.weight_decay, "Decoupled weight decay");
  app.add_option("--clip-norm", t.optimizer.clip_norm, "Gradient-norm clip; 0 disables");
  app.add_option("--validate-every", t.validate_every, "Steps between validations");
  app.add_option("--patience", t.patience, "Non-improving validations tolerated");
  app.add_option("--max-steps", t.max_steps, "Update limit");
  app.add_option("--validation-sample", t.validation_sample,
                 "Validation articles scored each time; 0 uses all");
  app.add_option("--target-mmp-f1", t.target_mmp_f1, "Stop once validation reaches this");
  app.add_option("--time-budget", t.time_budget_seconds, "Wall-clock budget in seconds");
}

struct TrainOptions {
  std::string train;
  std::string validation;
  std::string vocab;
  ModelOptions model;
};

void AddTrainInputs(CLI::App &app, TrainOptions &o) {
  app.add_option("--train", o.train, "Training split")->required()->check(CLI::ExistingFile);
  app.add_option("--validation", o.validation, "Validation split")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--vocab", o.vocab, "Vocabulary file")->required()->check(CLI::ExistingFile);
  AddModelOptions(app, o.model);
}

struct LoadedTask {
  Corpus train;
  Corpus validation;
  std::unique_ptr<Vocabulary> vocab;
};

LoadedTask LoadTask(const TrainOptions &o, Run &run, const GlobalOptions &g) {
  run.Input(o.train);
  run.Input(o.validation);
  run.Input(o.vocab);
  LoadedTask t;
  t.train = LoadRecords(o.train, g.policy());
  t.validation = LoadRecords(o.validation, g.policy());
  t.vocab = std::make_unique<Vocabulary>(Vocabulary::Load(o.vocab));
  return t;
}

void RunTrain(const TrainOptions &o, Run &run, const GlobalOptions &g, std::ostream &out) {
  const auto [model_config, train_config] = o.model.Resolve(g.seed);
  const LoadedTask task = LoadTask(o, run, g);
  const fs::path model_path = run.Output("model.ckpt");
  const fs::path curve_path = run.Output("curve.jsonl");
  const fs::path summary_path = run.Output("train_summary.json");
  auto model = CreateModel<float>(model_config, task.vocab->size(), g.seed);
  const TrainResult result = Train(*model, *task.vocab, task.train, task.validation, train_config);
  run.CreateOutputDir();
  ag::WriteCheckpoint(model_path.string(), result.best);
  WriteText(curve_path, result.curve.ToJsonLines());
  const json summary = {{"architecture", ArchitectureName(model_config.architecture)},
                        {"parameters", model->ParameterCount()},
                        {"steps", result.steps},
                        {"best_step", result.best_step},
                        {"best_mmp_f1", result.best_mmp_f1},
                        {"stop_reason", result.stop_reason}};
  WriteText(summary_path, summary.dump() + "\n");
  char line[160];
  std::snprintf(line, sizeof(line), "%s: %lld steps (%s), best validation MMP-F1 %.1f at step %lld\n",
                ArchitectureName(model_config.architecture), static_cast<long long>(result.steps),
                result.stop_reason.c_str(), 100.0 * result.best_mmp_f1,
                static_cast<long long>(result.best_step));
  out << line;
}

// ---- evaluate ----

struct EvaluateOptions {
  std::string input;
  std::string predictions;
  std::string model;
  std::string vocab;
  std::string labels;
  std::string name = "model";
  int beam_size = TrainConfig().beam_size;
  int batch_size = DecodeOptions().batch_size;
};

void AddEvaluate(CLI::App &app, EvaluateOptions &o) {
  app.add_option("--input", o.input, "Split with expected pairs")
      ->required()
      ->check(CLI::ExistingFile);
  auto *p = app.add_option("--predictions", o.predictions, "Predictions in record-stream format")
                ->check(CLI::ExistingFile);
  auto *m = app.add_option("--model", o.model, "Checkpoint to generate predictions with")
                ->check(CLI::ExistingFile);
  auto *v = app.add_option("--vocab", o.vocab, "Vocabulary of the checkpoint")
                ->check(CLI::ExistingFile);
  p->excludes(m)->excludes(v);
  m->needs(v);
  v->needs(m);
  app.add_option("--labels", o.labels, "Diagnostic labels of the split for subset columns")
      ->check(CLI::ExistingFile);
  app.add_option("--name", o.name, "Row label in the printed table");
  app.add_option("--beam", o.beam_size, "Beam width");
  app.add_option("--decode-batch", o.batch_size, "Articles decoded together");
}

void RunEvaluate(const EvaluateOptions &o, Run &run, const GlobalOptions &g, std::ostream &out) {
  if (o.predictions.empty() == o.model.empty()) {
    throw UsageError("give either --predictions, or --model with --vocab");
  }
  if (o.beam_size < 1 || o.batch_size < 1) throw UsageError("--beam and --decode-batch must be positive");
  run.Input(o.input);
  const Corpus split = LoadRecords(o.input, g.policy());
  DiagnosticLabels labels;
  if (!o.labels.empty()) {
    run.Input(o.labels);
    labels = ReadLabels(o.labels);
  }
  PredictionMap predictions;
  std::optional<fs::path> predictions_path;
  if (!o.predictions.empty()) {
    run.Input(o.predictions);
    predictions = LoadPredictions(o.predictions, g.policy());
  } else {
    run.Input(o.model);
    run.Input(o.vocab);
    const Vocabulary vocab = Vocabulary::Load(o.vocab);
    auto model = LoadModel(o.model, vocab);
    DecodeOptions options;
    options.beam_size = o.beam_size;
    options.max_len = model->config().max_target_len;
    options.batch_size = o.batch_size;
    predictions = Predict(*model, vocab, split, options);
    predictions_path = run.Output("predictions.jsonl");
  }
  const MetricReport report = BuildReport(split, predictions, labels, g.policy());
  const fs::path report_path = run.Output("report.json");
  run.CreateOutputDir();
  if (predictions_path) {
    Corpus records;
    for (const auto &r : split) records.push_back({r.article_id, "", predictions.at(r.article_id)});
    WriteRecords(*predictions_path, records, /*include_text=*/false);
  }
  WriteText(report_path, MetricReportJson(report) + "\n");
  out << FormatMetricTable({{o.name, report}});
}

// ---- hpo ----

struct HpoOptions {
  TrainOptions task;
  std::string space;
  StudyConfig study;
};

void AddHpo(CLI::App &app, HpoOptions &o) {
  AddTrainInputs(app, o.task);
  app.add_option("--space", o.space, "Search-space file (default: the built-in space)")
      ->check(CLI::ExistingFile);
  app.add_option("--trials", o.study.n_trials, "Number of trials");
  app.add_option("--gamma", o.study.gamma, "Share of trials modelled as good");
  app.add_option("--candidates", o.study.n_candidates, "Candidates scored per suggestion");
  app.add_option("--startup-trials", o.study.startup_trials, "Trials drawn from the prior");
  app.add_option("--keep-fraction", o.study.pruner_keep_fraction,
                 "Pruner keeps trials in this top fraction");
  app.add_option("--pruner-warmup", o.study.pruner_warmup_trials,
                 "Completed trials needed before pruning");
}

void RunHpo(const HpoOptions &o, Run &run, const GlobalOptions &g, std::ostream &out) {
  const auto [model_config, train_config] = o.task.model.Resolve(g.seed);
  StudyConfig study = o.study;
  study.seed = g.seed;
  CheckUsage([&] { study.Validate(); });
  SearchSpace space = DefaultSearchSpace();
  if (!o.space.empty()) {
    run.Input(o.space);
    space = SearchSpace::Load(o.space);
  }
  const LoadedTask loaded = LoadTask(o.task, run, g);
  const fs::path log_path = run.Output("study.jsonl");
  const fs::path best_path = run.Output("best.json");
  run.CreateOutputDir();
  TrainingTask task{loaded.vocab.get(), &loaded.train, &loaded.validation, model_config,
                    train_config, g.seed};
  const StudyResult result = RunStudy(MakeTrainingObjective(task), space, study, log_path);
  size_t counts[4] = {};
  for (const auto &t : result.trials) ++counts[static_cast<size_t>(t.status)];
  json best = nullptr;
  if (result.best) best = json::parse(TrialJson(result.trials[*result.best]));
  WriteText(best_path, best.dump() + "\n");
  out << "trials " << result.trials.size();
  for (TrialStatus s : {TrialStatus::kCompleted, TrialStatus::kPruned, TrialStatus::kFailed}) {
    out << " " << TrialStatusName(s) << " " << counts[static_cast<size_t>(s)];
  }
  out << "\n";
  if (result.best) {
    const Trial &t = result.trials[*result.best];
    char line[96];
    std::snprintf(line, sizeof(line), "best trial %lld: MMP-F1 %.1f\n",
                  static_cast<long long>(t.id), 100.0 * *t.value);
    out << line << AssignmentJson(t.params) << "\n";
  }
}

}  // namespace

std::string RunManifest::ToJson() const {
  auto files = [](const std::vector<fs::path> &paths) {
    json a = json::array();
    for (const auto &p : paths) {
      a.push_back({{"path", p.generic_string()}, {"sha256", Sha256File(p)}});
    }
    return a;
  };
  return json{{"command", command},
              {"config", json::parse(config_json)},
              {"inputs", files(inputs)},
              {"seed", seed},
              {"tool_version", kToolVersion},
              {"outputs", files(outputs)},
              {"wall_seconds", wall_seconds}}
      .dump(2);
}

void TuneAllocator() {
#ifdef __GLIBC__
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

int RunCli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app("Multi-property extraction toolkit", "mpe");
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "TOML file; [command] sections hold per-command flags");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.fallthrough();
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  GlobalOptions global;
  app.add_option("--seed", global.seed, "Seed for every random choice");
  app.add_option("--out-dir", global.out_dir, "Directory for outputs and the run manifest");
  app.add_flag("--case-insensitive", global.case_insensitive, "Compare texts case-insensitively");

  GenOptions gen;
  MergeOptions merge;
  SplitOptions split;
  AuditOptions audit;
  DiagnoseOptions diagnose;
  TokenizeOptions tokenize;
  TrainOptions train;
  EvaluateOptions evaluate;
  HpoOptions hpo;
  struct Command {
    CLI::App *app;
    std::function<void(Run &)> run;
  };
  std::vector<Command> commands;
  auto add = [&](const char *name, const char *help, auto add_options, auto run) {
    CLI::App *sub = app.add_subcommand(name, help);
    add_options(*sub);
    commands.push_back({sub, run});
  };
  add("gen", "Generate a synthetic corpus", [&](CLI::App &a) { AddGen(a, gen); },
      [&](Run &r) { RunGen(gen, r, global, out); });
  add("merge", "Merge single-property records into MPE records",
      [&](CLI::App &a) { AddMerge(a, merge); }, [&](Run &r) { RunMerge(merge, r, global, out); });
  add("split", "Split a corpus", [&](CLI::App &a) { AddSplit(a, split); },
      [&](Run &r) { RunSplit(split, r, global, out); });
  add("audit", "Audit a split for leakage", [&](CLI::App &a) { AddAudit(a, audit); },
      [&](Run &r) { RunAudit(audit, r, global, out); });
  add("diagnose", "Label diagnostic subsets", [&](CLI::App &a) { AddDiagnose(a, diagnose); },
      [&](Run &r) { RunDiagnose(diagnose, r, global, out); });
  add("tokenize", "Learn a subword vocabulary", [&](CLI::App &a) { AddTokenize(a, tokenize); },
      [&](Run &r) { RunTokenize(tokenize, r, global, out); });
  add("train", "Train a model", [&](CLI::App &a) { AddTrainInputs(a, train); },
      [&](Run &r) { RunTrain(train, r, global, out); });
  add("evaluate", "Score predictions or a model", [&](CLI::App &a) { AddEvaluate(a, evaluate); },
      [&](Run &r) { RunEvaluate(evaluate, r, global, out); });
  add("hpo", "Run a hyperparameter study", [&](CLI::App &a) { AddHpo(a, hpo); },
      [&](Run &r) { RunHpo(hpo, r, global, out); });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion &) {
    out << kToolVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError &e) {
    err << "error: usage: " << OneLine(e.what()) << "\n";
    return kExitUsageError;
  }

  for (const Command &c : commands) {
    if (!c.app->parsed()) continue;
    try {
      Run run(c.app->get_name(), global, ConfigJson(app, *c.app));
      c.run(run);
      run.Finish();
      return kExitOk;
    } catch (const UsageError &e) {
      err << "error: usage: " << OneLine(e.what()) << "\n";
      return kExitUsageError;
    } catch (const Error &e) {
      err << "error: " << ErrorCodeName(e.code()) << ": " << OneLine(e.what()) << "\n";
      return kExitRuntimeError;
    } catch (const std::exception &e) {
      err << "error: internal: " << OneLine(e.what()) << "\n";
      return kExitRuntimeError;
    }
  }
  err << "error: usage: no command given\n";
  return kExitUsageError;
}

}  // namespace mpe
