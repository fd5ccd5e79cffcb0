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
#include <memory>
#include <numeric>
#include <set>

#include <gtest/gtest.h>

#include "mpe/autograd/gradcheck.h"
#include "mpe/base/error.h"
#include "mpe/corpus/synthetic.h"
#include "mpe/models/decode.h"
#include "mpe/models/model.h"
#include "mpe/models/trainer.h"
#include "test_util.h"

namespace mpe {
namespace {

using ag::Tensor;

constexpr int32_t kVocab = 11;

ModelConfig Micro(Architecture arch, int dim = 8) {
  ModelConfig c;
  c.architecture = arch;
  c.encoder_layers = 1;
  c.decoder_layers = 1;
  c.embedding_dim = dim;
  c.ffn_dim = 2 * dim;
  c.attention_heads = 2;
  c.max_target_len = 16;
  return c;
}

std::vector<int32_t> RandomIds(Rng &rng, size_t n, int32_t vocab = kVocab) {
  std::vector<int32_t> ids(n);
  // Skips the reserved ids so that no PAD or BOS shows up in the middle.
  for (auto &id : ids) id = static_cast<int32_t>(rng.UniformInt(kEosId + 1, vocab - 1));
  return ids;
}

template <typename T>
std::vector<T> Values(const Tensor<T> &t) {
  return t.values();
}

template <typename T>
double MaxAbsDiff(const std::vector<T> &a, const std::vector<T> &b) {
  EXPECT_EQ(a.size(), b.size());
  double m = 0.0;
  for (size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
    m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  }
  return m;
}

// Sum over the position axis of a [1, L, D] encoding.
std::vector<double> PoolPositions(const Tensor<double> &states) {
  const int64_t l = states.dim(1), d = states.dim(2);
  std::vector<double> out(static_cast<size_t>(d), 0.0);
  for (int64_t i = 0; i < l; ++i) {
    for (int64_t j = 0; j < d; ++j) out[j] += states.values()[i * d + j];
  }
  return out;
}

class ArchitectureTest : public ::testing::TestWithParam<Architecture> {};

INSTANTIATE_TEST_SUITE_P(All, ArchitectureTest,
                         ::testing::Values(Architecture::kSeq2Seq, Architecture::kTransformer,
                                           Architecture::kDualSource),
                         [](const auto &info) { return std::string(ArchitectureName(info.param)); });

TEST(ModelConfigTest, DefaultsAreValidAndRoundTrip) {
  ModelConfig c;
  c.Validate();
  EXPECT_EQ(c.encoder_layers, 2);
  EXPECT_EQ(c.decoder_layers, 2);
  EXPECT_EQ(c.max_source_len, 512);
  c.activation = Activation::kGelu;
  c.positional = Positional::kLearned;
  c.cross_attention_order = CrossAttentionOrder::kArticleThenProperties;
  const ModelConfig back = ModelConfig::FromJson(c.ToJson());
  EXPECT_EQ(back.ToJson(), c.ToJson());
  TrainConfig t;
  EXPECT_EQ(t.patience, 3);
  EXPECT_EQ(t.beam_size, 8);
  EXPECT_EQ(TrainConfig::FromJson(t.ToJson()).ToJson(), t.ToJson());
}

TEST(ModelConfigTest, RejectsInconsistentSettings) {
  ModelConfig c;
  c.attention_heads = 3;
  EXPECT_THROW(c.Validate(), Error);
  c = ModelConfig();
  c.encoder_layers = 0;
  EXPECT_THROW(c.Validate(), Error);
  EXPECT_THROW(ModelConfig::FromJson(R"({"bogus": 1})"), Error);
  TrainConfig t;
  t.patience = 0;
  EXPECT_THROW(t.Validate(), Error);
  t = TrainConfig();
  t.validate_every = 0;
  EXPECT_THROW(t.Validate(), Error);
}

TEST_P(ArchitectureTest, SameInputsGiveIdenticalLogits) {
  auto model = CreateModel<float>(Micro(GetParam()), kVocab, 5);
  auto again = CreateModel<float>(Micro(GetParam()), kVocab, 5);
  Rng rng(1);
  std::vector<ModelInput> in = {{RandomIds(rng, 3), RandomIds(rng, 9)}};
  std::vector<std::vector<int32_t>> tgt = {RandomIds(rng, 5)};
  const auto a = Values(model->Logits(in, tgt, false, nullptr));
  const auto b = Values(model->Logits(in, tgt, false, nullptr));
  const auto c = Values(again->Logits(in, tgt, false, nullptr));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
}

TEST_P(ArchitectureTest, DecoderIsCausal) {
  auto model = CreateModel<double>(Micro(GetParam()), kVocab, 7);
  Rng rng(2);
  std::vector<ModelInput> in = {{RandomIds(rng, 3), RandomIds(rng, 12)}};
  std::vector<int32_t> target = RandomIds(rng, 8);
  const auto base = Values(model->Logits(in, {target}, false, nullptr));
  for (size_t t = 0; t + 1 < target.size(); ++t) {
    std::vector<int32_t> changed = target;
    for (size_t k = t + 1; k < changed.size(); ++k) changed[k] = kEosId + 1 + (changed[k] + 3) % 8;
    const auto other = Values(model->Logits(in, {changed}, false, nullptr));
    // Position p of the logits sees BOS and target[0..p-1].
    for (size_t p = 0; p <= t + 1; ++p) {
      for (int32_t v = 0; v < kVocab; ++v) {
        ASSERT_DOUBLE_EQ(base[p * kVocab + v], other[p * kVocab + v]) << "t=" << t << " p=" << p;
      }
    }
  }
}

TEST_P(ArchitectureTest, TokensBeyondSourceLimitAreIgnored) {
  ModelConfig c = Micro(GetParam());
  c.max_source_len = 512;
  auto model = CreateModel<float>(c, kVocab, 3);
  Rng rng(4);
  ModelInput in{RandomIds(rng, 2), RandomIds(rng, 600)};
  // The dual model reads the article alone; the others read properties,
  // FIELD_SEP and the article.
  const size_t cut = GetParam() == Architecture::kDualSource ? 512 : 512 - in.properties.size() - 1;
  ModelInput tail = in;
  for (size_t i = cut; i < tail.article.size(); ++i) tail.article[i] = kEosId + 1 + (tail.article[i] % 7);
  std::vector<std::vector<int32_t>> tgt = {RandomIds(rng, 4)};
  const auto a = Values(model->Logits(std::vector<ModelInput>{in}, tgt, false, nullptr));
  const auto b = Values(model->Logits(std::vector<ModelInput>{tail}, tgt, false, nullptr));
  EXPECT_EQ(a, b);
  // A change just inside the window does matter.
  ModelInput head = in;
  head.article[cut - 1] = head.article[cut - 1] == 5 ? 6 : 5;
  const auto h = Values(model->Logits(std::vector<ModelInput>{head}, tgt, false, nullptr));
  EXPECT_GT(MaxAbsDiff(a, h), 0.0);
}

TEST_P(ArchitectureTest, TiedEmbeddingIsOneTensor) {
  auto tied = CreateModel<double>(Micro(GetParam()), kVocab, 1);
  ModelConfig untied_config = Micro(GetParam());
  untied_config.tie_all_embeddings = false;
  auto untied = CreateModel<double>(untied_config, kVocab, 1);
  ASSERT_TRUE(tied->FindParameter("embedding").defined());
  EXPECT_FALSE(tied->FindParameter("output.weight").defined());
  EXPECT_FALSE(untied->FindParameter("embedding").defined());
  ASSERT_TRUE(untied->FindParameter("output.weight").defined());
  const int64_t table = int64_t{kVocab} * 8;
  EXPECT_GE(untied->ParameterCount() - tied->ParameterCount(), table);
  // A token that never appears as input still gets a gradient through the
  // output projection, in the single shared accumulator.
  std::vector<ModelInput> in = {{{3, 4}, {5, 6, 7}}};
  auto loss = tied->Loss(in, {{8, 5}}, false, nullptr);
  ag::Backward(loss);
  Tensor<double> e = tied->FindParameter("embedding");
  double unused_row = 0.0;
  for (int64_t j = 0; j < 8; ++j) unused_row += std::abs(e.grad()[10 * 8 + j]);
  EXPECT_GT(unused_row, 0.0);
}

TEST_P(ArchitectureTest, OutOfVocabularyIdsAreRejected) {
  auto model = CreateModel<float>(Micro(GetParam()), kVocab, 1);
  std::vector<ModelInput> in = {{{3}, {5, kVocab + 2}}};
  EXPECT_THROW(model->Logits(in, {{5}}, false, nullptr), Error);
  std::vector<ModelInput> ok = {{{3}, {5}}};
  EXPECT_THROW(model->Logits(ok, {{kVocab}}, false, nullptr), Error);
}

TEST_P(ArchitectureTest, OneExampleLossMatchesPerplexity) {
  auto model = CreateModel<double>(Micro(GetParam()), kVocab, 9);
  Rng rng(6);
  std::vector<ModelInput> in = {{RandomIds(rng, 2), RandomIds(rng, 10)}};
  std::vector<int32_t> target = RandomIds(rng, 6);
  const double loss = model->Loss(in, {target}, false, nullptr).item();
  const auto logits = Values(model->Logits(in, {target}, false, nullptr));
  std::vector<int32_t> labels = target;
  labels.push_back(kEosId);
  double nll = 0.0;
  for (size_t p = 0; p < labels.size(); ++p) {
    const auto lp = LogSoftmax(std::span<const double>(logits.data() + p * kVocab, kVocab));
    nll -= lp[labels[p]];
  }
  const double perplexity = std::exp(nll / static_cast<double>(labels.size()));
  EXPECT_NEAR(std::exp(loss) / perplexity, 1.0, 1e-6);
}

TEST_P(ArchitectureTest, LossIgnoresPadding) {
  auto model = CreateModel<double>(Micro(GetParam()), kVocab, 9);
  Rng rng(8);
  std::vector<ModelInput> in = {{RandomIds(rng, 2), RandomIds(rng, 10)},
                                {RandomIds(rng, 4), RandomIds(rng, 5)}};
  std::vector<std::vector<int32_t>> tgt = {RandomIds(rng, 6), RandomIds(rng, 2)};
  const double both = model->Loss(in, tgt, false, nullptr).item();
  const double first = model->Loss(std::span(in).first(1), {tgt[0]}, false, nullptr).item();
  const double second = model->Loss(std::span(in).last(1), {tgt[1]}, false, nullptr).item();
  // Token-weighted mean: 7 tokens from the first, 3 from the second.
  EXPECT_NEAR(both, (7 * first + 3 * second) / 10, 1e-10);
}

TEST_P(ArchitectureTest, MicroModelGradientsMatchFiniteDifferences) {
  ModelConfig c = Micro(GetParam(), 8);
  c.activation = Activation::kGelu;
  if (GetParam() == Architecture::kDualSource) {
    c.encoder_layers = 2;
    c.decoder_layers = 2;
  }
  auto model = CreateModel<double>(c, kVocab, 12);
  Rng rng(10);
  std::vector<ModelInput> in = {{RandomIds(rng, 2), RandomIds(rng, 6)},
                                {RandomIds(rng, 3), RandomIds(rng, 4)}};
  std::vector<std::vector<int32_t>> tgt = {RandomIds(rng, 4), RandomIds(rng, 2)};
  // Key biases shift every score of a query equally, so their exact gradient
  // is zero and a relative error there only measures roundoff.
  std::vector<Tensor<double>> params, key_biases;
  for (const auto &p : model->parameters()) {
    (p.name.ends_with(".key.bias") ? key_biases : params).push_back(p.tensor);
  }
  ag::Backward(model->Loss(in, tgt, false, nullptr));
  for (const auto &b : key_biases) {
    for (double g : b.grad()) EXPECT_LT(std::abs(g), 1e-12);
  }
  const double err = ag::GradCheck([&] { return model->Loss(in, tgt, false, nullptr); }, params,
                                   1e-6, 6);
  EXPECT_LT(err, 1e-3);
}

TEST(DualSourceTest, BothSourcesShareTheEncoder) {
  auto model = CreateModel<float>(Micro(Architecture::kDualSource), kVocab, 2);
  for (const auto &p : model->parameters()) {
    EXPECT_EQ(p.name.find("encoder.properties"), std::string::npos) << p.name;
    EXPECT_EQ(p.name.find("encoder.article"), std::string::npos) << p.name;
  }
  std::vector<ModelInput> in = {{{5, 6, 7, 8}, {5, 6, 7, 8}}};
  auto check = [&] {
    EncoderMemory<float> m = model->Encode(in, false, nullptr);
    ASSERT_EQ(m.states.size(), 2u);
    EXPECT_EQ(Values(m.states[0]), Values(m.states[1]));
  };
  check();
  ag::AdamW<float> opt(model->parameters(), TrainConfig::DefaultOptimizer());
  ag::Backward(model->Loss(in, {{9, 3}}, false, nullptr));
  opt.Step();
  check();
}

TEST(DualSourceTest, SwappingSourcesChangesLogits) {
  auto model = CreateModel<float>(Micro(Architecture::kDualSource), kVocab, 2);
  std::vector<ModelInput> in = {{{5, 6}, {7, 8, 9, 10}}};
  std::vector<ModelInput> swapped = {{{7, 8, 9, 10}, {5, 6}}};
  const auto a = Values(model->Logits(in, {{3, 4}}, false, nullptr));
  const auto b = Values(model->Logits(swapped, {{3, 4}}, false, nullptr));
  EXPECT_GT(MaxAbsDiff(a, b), 1e-4);
}

TEST(DualSourceTest, CrossAttentionOrderIsConfigurable) {
  ModelConfig c = Micro(Architecture::kDualSource);
  c.cross_attention_order = CrossAttentionOrder::kArticleThenProperties;
  auto model = CreateModel<float>(c, kVocab, 2);
  EXPECT_TRUE(model->FindParameter("decoder.layers.0.cross_attn_article.query.weight").defined());
  EXPECT_TRUE(model->FindParameter("decoder.layers.0.cross_attn_properties.query.weight").defined());
}

TEST(DualSourceTest, PooledEncodingIgnoresOrderWithoutPositions) {
  ModelConfig c = Micro(Architecture::kDualSource);
  c.positional = Positional::kNone;
  c.encoder_layers = 2;
  auto model = CreateModel<double>(c, kVocab, 4);
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    ModelInput in{RandomIds(rng, 3), RandomIds(rng, 9)};
    ModelInput perm = in;
    rng.Shuffle(perm.article.begin(), perm.article.end());
    const auto a = model->Encode(std::vector<ModelInput>{in}, false, nullptr);
    const auto b = model->Encode(std::vector<ModelInput>{perm}, false, nullptr);
    const auto pa = PoolPositions(a.states[1]);
    const auto pb = PoolPositions(b.states[1]);
    EXPECT_LT(MaxAbsDiff(pa, pb), 1e-9);
  }
}

// One encoder layer on a single position: attention over one key is the
// identity on its value. With identity value, output and FFN weights and
// zero biases, the layer output is
//   h = x + LN(x);  y = h + relu(LN(h));  encoding = LN(y).
// For x = (1, 2, 3, 4): LN(x) = (-3, -1, 1, 3) / sqrt(5) = (-1.341641,
// -0.447214, 0.447214, 1.341641); h is an affine map of x so LN(h) = LN(x);
// y = (-0.341641, 1.552786, 3.894427, 6.683282); LN(y) below.
TEST(TransformerTest, HandComputedIdentityAttentionLayer) {
  ModelConfig c = Micro(Architecture::kDualSource, 4);
  c.ffn_dim = 4;
  c.attention_heads = 1;
  c.positional = Positional::kNone;
  auto model = CreateModel<double>(c, 7, 1);
  auto set = [&](const std::string &name, const std::vector<double> &values) {
    Tensor<double> t = model->FindParameter(name);
    ASSERT_TRUE(t.defined()) << name;
    ASSERT_EQ(t.values().size(), values.size()) << name;
    t.values() = values;
  };
  const std::vector<double> eye = {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};
  const std::string p = "encoder.layers.0.";
  for (const char *w : {"self_attn.value", "self_attn.output", "ffn.in", "ffn.out"}) {
    set(p + w + ".weight", eye);
    set(p + w + ".bias", {0, 0, 0, 0});
  }
  // The embedding is scaled by sqrt(4) = 2 before entering the encoder.
  Tensor<double> e = model->FindParameter("embedding");
  for (int j = 0; j < 4; ++j) e.values()[5 * 4 + j] = 0.5 * (j + 1);
  const auto m = model->Encode(std::vector<ModelInput>{{{5}, {6}}}, false, nullptr);
  const auto out = Values(m.states[0]);
  const std::vector<double> expected = {-1.2516725, -0.5306913, 0.3604906, 1.4218732};
  ASSERT_EQ(out.size(), 4u);
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(out[j], expected[j], 1e-5);
}

TEST(RecurrentTest, ZeroWeightsGiveUniformPrediction) {
  auto model = CreateModel<double>(Micro(Architecture::kSeq2Seq), kVocab, 1);
  for (const auto &p : model->parameters()) {
    auto &v = const_cast<Tensor<double> &>(p.tensor).values();
    std::fill(v.begin(), v.end(), 0.0);
  }
  std::vector<ModelInput> in = {{{5, 6}, {7, 8, 9}}};
  const double loss = model->Loss(in, {{3, 4, 5}}, false, nullptr).item();
  EXPECT_NEAR(loss, std::log(static_cast<double>(kVocab)), 1e-12);
}

TEST(RecurrentTest, LongRolloutStaysFinite) {
  ModelConfig c = Micro(Architecture::kSeq2Seq, 16);
  c.max_target_len = 512;
  auto model = CreateModel<float>(c, kVocab, 3);
  for (const auto &p : model->parameters()) {
    for (float &v : const_cast<Tensor<float> &>(p.tensor).values()) v *= 8.0f;
  }
  Rng rng(5);
  std::vector<ModelInput> in = {{RandomIds(rng, 4), RandomIds(rng, 508)}};
  const auto logits = Values(model->Logits(in, {RandomIds(rng, 511)}, false, nullptr));
  for (float v : logits) ASSERT_TRUE(std::isfinite(v));
  const auto memory = model->Encode(in, false, nullptr);
  for (const auto &s : memory.states) {
    for (float v : s.values()) {
      ASSERT_TRUE(std::isfinite(v));
      ASSERT_LE(std::abs(v), 1e6f);
    }
  }
}

// Toy next-token distribution over 6 ids that depends on the whole prefix.
StepFunction ToyStep(uint64_t seed) {
  return [seed](const std::vector<std::vector<int32_t>> &prefixes) {
    std::vector<std::vector<double>> out;
    for (const auto &prefix : prefixes) {
      uint64_t h = seed;
      for (int32_t t : prefix) h = h * 1000003u + static_cast<uint64_t>(t) + 17;
      Rng rng(h);
      std::vector<double> logits(6);
      for (auto &l : logits) l = 3.0 * rng.Normal();
      // The decoders never emit PAD or BOS; the toy gives them no mass.
      logits[kPadId] = logits[kBosId] = -1e9;
      out.push_back(LogSoftmax(std::span<const double>(logits)));
    }
    return out;
  };
}

struct Enumerated {
  std::vector<int32_t> tokens;
  double log_prob = 0.0;
  bool finished = false;
};

// Every sequence the decoders can produce: tokens other than PAD and BOS,
// stopping at EOS or after max_len tokens.
void EnumerateAll(const StepFunction &step, std::vector<int32_t> prefix, double lp, int max_len,
                  std::vector<Enumerated> &out) {
  const auto row = step({prefix})[0];
  for (int32_t t = kEosId; t < 6; ++t) {
    const double next = lp + row[t];
    if (t == kEosId) {
      out.push_back({{prefix.begin() + 1, prefix.end()}, next, true});
      continue;
    }
    std::vector<int32_t> longer = prefix;
    longer.push_back(t);
    if (static_cast<int>(longer.size()) - 1 == max_len) {
      out.push_back({{longer.begin() + 1, longer.end()}, next, false});
    } else {
      EnumerateAll(step, longer, next, max_len, out);
    }
  }
}

TEST(DecodeTest, BeamWidthOneIsGreedyOnToyModels) {
  for (uint64_t seed = 0; seed < 50; ++seed) {
    const auto g = GreedySearch(ToyStep(seed), 6);
    const auto b = BeamSearch(ToyStep(seed), 1, 6);
    EXPECT_EQ(g.tokens, b.tokens) << seed;
    EXPECT_NEAR(g.log_prob, b.log_prob, 1e-12);
  }
}

TEST(DecodeTest, WidthBelowOneThrows) {
  EXPECT_THROW(BeamSearch(ToyStep(1), 0, 4), Error);
  auto model = CreateModel<float>(Micro(Architecture::kTransformer), kVocab, 1);
  DecodeOptions options;
  options.beam_size = 0;
  std::vector<ModelInput> in = {{{5}, {6}}};
  EXPECT_THROW(Generate(*model, std::span<const ModelInput>(in), options), Error);
}

TEST(DecodeTest, BeamScoresAgreeWithBruteForceEnumeration) {
  int beam_below_greedy = 0;
  for (uint64_t seed = 0; seed < 200; ++seed) {
    const StepFunction step = ToyStep(seed);
    std::vector<Enumerated> all;
    EnumerateAll(step, {kBosId}, 0.0, 4, all);
    // 3 live tokens: 3^k EOS endings for k < 4 plus 3^4 cut-offs.
    ASSERT_EQ(all.size(), 1u + 3 + 9 + 27 + 81);
    double total = 0.0;
    for (const auto &e : all) total += std::exp(e.log_prob);
    EXPECT_NEAR(total, 1.0, 1e-9);
    auto lookup = [&](const Hypothesis &h) {
      for (const auto &e : all) {
        if (e.tokens == h.tokens && e.finished == h.finished) return e.log_prob;
      }
      ADD_FAILURE() << "decoded sequence missing from enumeration";
      return 0.0;
    };
    const auto greedy = GreedySearch(step, 4);
    const auto beam = BeamSearch(step, 8, 4);
    EXPECT_NEAR(lookup(greedy), greedy.log_prob, 1e-12);
    EXPECT_NEAR(lookup(beam), beam.log_prob, 1e-12);
    const size_t scored = beam.tokens.size() + (beam.finished ? 1 : 0);
    EXPECT_NEAR(beam.score, beam.log_prob / static_cast<double>(scored), 1e-12);
    double best_score = -1e300;
    for (const auto &e : all) {
      best_score = std::max(best_score, e.log_prob / static_cast<double>(e.tokens.size() + e.finished));
    }
    EXPECT_LE(beam.score, best_score + 1e-12);
    const auto raw = BeamSearch(step, 8, 4, false);
    EXPECT_NEAR(lookup(raw), raw.log_prob, 1e-12);
    if (raw.log_prob < greedy.log_prob - 1e-12) ++beam_below_greedy;
  }
  // Ranked by summed log-probability, beam(8) never ends below greedy. The
  // length-normalized choice can: it may prefer a longer, less probable
  // sequence with a better per-token score.
  EXPECT_EQ(beam_below_greedy, 0);
}

TEST(DecodeTest, WideBeamFindsTheExhaustiveOptimum) {
  // With a beam as wide as the whole search tree nothing is pruned, so the
  // normalized winner is the enumerated optimum.
  for (uint64_t seed = 0; seed < 30; ++seed) {
    const StepFunction step = ToyStep(seed);
    std::vector<Enumerated> all;
    EnumerateAll(step, {kBosId}, 0.0, 3, all);
    double best = -1e300;
    for (const auto &e : all) best = std::max(best, e.log_prob / static_cast<double>(e.tokens.size() + e.finished));
    const auto beam = BeamSearch(step, 200, 3);
    EXPECT_NEAR(beam.score, best, 1e-12) << seed;
  }
}

TEST(DecodeTest, BeamWidthOneIsGreedyOnMicroModels) {
  Rng rng(11);
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const Architecture arch = static_cast<Architecture>(seed % 3);
    auto model = CreateModel<double>(Micro(arch), kVocab, 100 + seed);
    std::vector<ModelInput> in = {{RandomIds(rng, 2), RandomIds(rng, 7)},
                                  {RandomIds(rng, 1), RandomIds(rng, 3)}};
    DecodeOptions greedy;
    greedy.max_len = 10;
    const auto batched = Generate(*model, std::span<const ModelInput>(in), greedy);
    for (size_t i = 0; i < in.size(); ++i) {
      const EncoderMemory<double> memory = model->Encode(std::span(in).subspan(i, 1), false, nullptr);
      StepFunction step = [&](const std::vector<std::vector<int32_t>> &prefixes) {
        std::vector<int64_t> rows(prefixes.size(), 0);
        const auto logits = model->Decode(SelectRows(memory, rows), prefixes, false, nullptr, true);
        std::vector<std::vector<double>> out;
        for (size_t k = 0; k < prefixes.size(); ++k) {
          out.push_back(LogSoftmax(std::span<const double>(logits.data() + k * kVocab, kVocab)));
        }
        return out;
      };
      EXPECT_EQ(BeamSearch(step, 1, 10).tokens, batched[i]) << seed;
      EXPECT_EQ(GreedySearch(step, 10).tokens, batched[i]) << seed;
    }
  }
}

TEST(DecodeTest, GenerationIsIndependentOfBatching) {
  auto model = CreateModel<float>(Micro(Architecture::kDualSource), kVocab, 8);
  Rng rng(12);
  std::vector<ModelInput> in;
  for (int i = 0; i < 5; ++i) in.push_back({RandomIds(rng, 1 + i % 3), RandomIds(rng, 2 + i)});
  DecodeOptions a, b;
  a.max_len = b.max_len = 8;
  a.batch_size = 5;
  b.batch_size = 2;
  EXPECT_EQ(Generate(*model, std::span<const ModelInput>(in), a),
            Generate(*model, std::span<const ModelInput>(in), b));
  a.beam_size = b.beam_size = 3;
  EXPECT_EQ(Generate(*model, std::span<const ModelInput>(in), a),
            Generate(*model, std::span<const ModelInput>(in), b));
}

// Small corpus, vocabulary and labels shared by the training tests.
struct TinyTask {
  Corpus train, validation;
  Vocabulary vocab;
};

const TinyTask &Task() {
  static const TinyTask *task = [] {
    GeneratorConfig g;
    g.article_count = 80;
    g.property_count = 6;
    g.mean_pairs_per_record = 2.0;
    g.max_properties_per_record = 3;
    g.mean_article_words = 14;
    g.relational_pool_size = 10;
    auto corpus = GenerateSynthetic(g, 21).records;
    return new TinyTask{Corpus(corpus.begin(), corpus.begin() + 64),
                        Corpus(corpus.begin() + 64, corpus.end()),
                        Vocabulary::Train(TokenizerTrainingTexts(corpus), 400, 1)};
  }();
  return *task;
}

TrainConfig FastTrain() {
  TrainConfig t;
  t.batch_size = 8;
  t.validate_every = 10;
  t.max_steps = 40;
  t.optimizer.learning_rate = 1e-3;
  t.validation_sample = 8;
  return t;
}

TEST(TrainTest, EncodesTargetsInRequestedOrder) {
  const auto &task = Task();
  ModelConfig c = Micro(Architecture::kDualSource);
  const auto examples = EncodeCorpus(task.train, task.vocab, c);
  ASSERT_EQ(examples.size(), task.train.size());
  for (size_t i = 0; i < examples.size(); ++i) {
    const auto &r = task.train[i];
    EXPECT_EQ(task.vocab.Decode(examples[i].target), SerializePairs(r.pairs, {RequestedProperties(r)}));
    const auto parsed = ParsePairs(task.vocab.Decode(examples[i].target));
    EXPECT_EQ(parsed.malformed, 0u);
    EXPECT_EQ(MakeAnswerSet(parsed.pairs), MakeAnswerSet(r.pairs));
    EXPECT_EQ(examples[i].input.article, task.vocab.Encode(r.text, 512));
  }
}

TEST(TrainTest, PatienceOneStopsAtSecondValidation) {
  const auto &task = Task();
  TrainConfig t = FastTrain();
  t.optimizer.learning_rate = 0.0;
  t.patience = 1;
  auto model = CreateModel<float>(Micro(Architecture::kDualSource), task.vocab.size(), 1);
  const auto result = Train(*model, task.vocab, task.train, task.validation, t);
  EXPECT_EQ(result.stop_reason, "patience");
  ASSERT_EQ(result.curve.points.size(), 2u);
  EXPECT_EQ(result.curve.points[1].step, 20);
  EXPECT_EQ(result.best_step, 10);
}

TEST(TrainTest, DefaultPatienceToleratesThreeFlatValidations) {
  const auto &task = Task();
  TrainConfig t = FastTrain();
  t.optimizer.learning_rate = 0.0;
  t.max_steps = 100;
  auto model = CreateModel<float>(Micro(Architecture::kTransformer), task.vocab.size(), 1);
  const auto result = Train(*model, task.vocab, task.train, task.validation, t);
  EXPECT_EQ(result.stop_reason, "patience");
  EXPECT_EQ(result.curve.points.size(), 4u);
}

TEST(TrainTest, SameSeedGivesIdenticalCurves) {
  const auto &task = Task();
  TrainConfig t = FastTrain();
  t.max_steps = 20;
  auto run = [&] {
    auto model = CreateModel<float>(Micro(Architecture::kDualSource), task.vocab.size(), 3);
    return Train(*model, task.vocab, task.train, task.validation, t);
  };
  const auto a = run();
  const auto b = run();
  EXPECT_EQ(a.curve.ToJsonLines(), b.curve.ToJsonLines());
  ASSERT_EQ(a.best.tensors.size(), b.best.tensors.size());
  for (size_t i = 0; i < a.best.tensors.size(); ++i) {
    EXPECT_EQ(a.best.tensors[i].values, b.best.tensors[i].values);
  }
  for (size_t i = 1; i < a.curve.points.size(); ++i) {
    EXPECT_GT(a.curve.points[i].step, a.curve.points[i - 1].step);
  }
}

TEST(TrainTest, PrunedCallbackStopsTraining) {
  const auto &task = Task();
  auto model = CreateModel<float>(Micro(Architecture::kSeq2Seq), task.vocab.size(), 3);
  int calls = 0;
  const auto result = Train(*model, task.vocab, task.train, task.validation, FastTrain(),
                            [&](const ValidationPoint &) { return ++calls == 2; });
  EXPECT_EQ(result.stop_reason, "pruned");
  EXPECT_EQ(result.steps, 20);
}

TEST(TrainTest, RejectsEmptySplitsAndDivergence) {
  const auto &task = Task();
  auto model = CreateModel<float>(Micro(Architecture::kDualSource), task.vocab.size(), 3);
  EXPECT_THROW(Train(*model, task.vocab, {}, task.validation, FastTrain()), Error);
  EXPECT_THROW(Train(*model, task.vocab, task.train, {}, FastTrain()), Error);
  auto &w = const_cast<Tensor<float> &>(model->parameters().back().tensor).values();
  w[0] = std::nanf("");
  try {
    Train(*model, task.vocab, task.train, task.validation, FastTrain());
    FAIL() << "expected a numeric error";
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kNumeric);
  }
}

TEST(TrainTest, OverfitsOneRecordWithinFiveHundredSteps) {
  const auto &task = Task();
  const Corpus one(task.train.begin(), task.train.begin() + 1);
  ModelConfig c = Micro(Architecture::kDualSource, 32);
  c.max_target_len = 64;
  TrainConfig t;
  t.batch_size = 1;
  t.validate_every = 25;
  t.max_steps = 500;
  t.patience = 100;
  t.target_mmp_f1 = 1.0;
  t.optimizer.learning_rate = 3e-3;
  auto model = CreateModel<float>(c, task.vocab.size(), 2);
  const auto result = Train(*model, task.vocab, one, one, t);
  EXPECT_EQ(result.stop_reason, "target");
  EXPECT_LE(result.steps, 500);
  DecodeOptions d;
  d.beam_size = 8;
  d.max_len = c.max_target_len;
  const auto predicted = Predict(*model, task.vocab, one, d);
  EXPECT_EQ(MakeAnswerSet(predicted.at(one[0].article_id)), MakeAnswerSet(one[0].pairs));
}

TEST(EvaluateTest, UntrainedModelScoresNearZero) {
  const auto &task = Task();
  auto model = CreateModel<float>(Micro(Architecture::kDualSource), task.vocab.size(), 4);
  const auto report = EvaluateModel(*model, task.vocab, task.validation, 1, {});
  EXPECT_LT(report.mmp_f1, 0.05);
  EXPECT_EQ(report.n_articles, task.validation.size());
}

TEST(EvaluateTest, ReportMatchesDirectRecomputation) {
  const auto &task = Task();
  auto model = CreateModel<float>(Micro(Architecture::kDualSource), task.vocab.size(), 4);
  TrainConfig t = FastTrain();
  t.max_steps = 30;
  Train(*model, task.vocab, task.train, task.validation, t);
  DecodeOptions d;
  d.beam_size = 2;
  d.max_len = model->config().max_target_len;
  const auto predictions = Predict(*model, task.vocab, task.validation, d);
  // Flag every other instance as "rare" to exercise the subset path.
  DiagnosticLabels labels;
  size_t k = 0;
  for (const auto &r : task.validation) {
    for (const auto &prop : RequestedProperties(r)) {
      InstanceLabel l{r.article_id, prop, {}};
      l.flags[static_cast<size_t>(Subset::kRare)] = (k++ % 2 == 0);
      labels.push_back(l);
    }
  }
  const auto report = EvaluateModel(*model, task.vocab, task.validation, 2, labels);
  double overall = 0.0, rare = 0.0;
  size_t rare_articles = 0;
  for (const auto &r : task.validation) {
    const AnswerSet expected = MakeAnswerSet(r.pairs);
    const AnswerSet predicted = MakeAnswerSet(predictions.at(r.article_id));
    overall += PairF1(expected, predicted).f1;
    std::set<std::string> flagged;
    for (const auto &l : labels) {
      if (l.article_id == r.article_id && l.has(Subset::kRare)) flagged.insert(l.property);
    }
    if (flagged.empty()) continue;
    AnswerSet e, o;
    for (const auto &p : expected) if (flagged.count(p.property)) e.insert(p);
    for (const auto &p : predicted) if (flagged.count(p.property)) o.insert(p);
    rare += PairF1(e, o).f1;
    ++rare_articles;
  }
  EXPECT_NEAR(report.mmp_f1, overall / task.validation.size(), 1e-12);
  ASSERT_TRUE(report.per_subset.count(Subset::kRare));
  EXPECT_NEAR(report.per_subset.at(Subset::kRare), rare / rare_articles, 1e-12);
}

TEST(CheckpointTest, SavedModelReloadsWithIdenticalOutputs) {
  const auto &task = Task();
  testing_util::TempDir dir;
  ModelConfig c = Micro(Architecture::kTransformer);
  c.positional = Positional::kLearned;
  c.max_positions = 600;
  auto model = CreateModel<float>(c, task.vocab.size(), 6);
  const auto path = dir.path() / "model.ckpt";
  SaveModel(path, *model, task.vocab, R"({"note": "x"})");
  auto loaded = LoadModel(path, task.vocab);
  EXPECT_EQ(loaded->config().ToJson(), c.ToJson());
  std::vector<ModelInput> in = {{{7, 8}, {9, 10, 11}}};
  EXPECT_EQ(Values(model->Logits(in, {{12}}, false, nullptr)),
            Values(loaded->Logits(in, {{12}}, false, nullptr)));
  const Vocabulary other = Vocabulary::Train(std::vector<std::string>{"entirely different words"}, 30, 1);
  try {
    LoadModel(path, other);
    FAIL() << "expected a vocabulary mismatch";
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kFailedPrecondition);
  }
}

}  // namespace
}  // namespace mpe
