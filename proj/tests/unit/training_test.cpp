#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <limits>

#include "cdg/common/errors.hpp"
#include "cdg/tensor/tape.hpp"
#include "cdg/training/trainer.hpp"
#include "toy_model.hpp"

using namespace cdg;
using cdg::testing::toy_config;

namespace {

// Responses are a deterministic function of the history, so a model can
// memorize the corpus completely.
std::vector<DialogueSample> memorizable_corpus(std::size_t n) {
  std::vector<DialogueSample> out;
  for (std::size_t k = 0; k < n; ++k) {
    const int i = static_cast<int>(k);
    out.push_back({{{7 + i}}, i % 2, {40 + i, 72 + i % 20, 40 + i}});
  }
  return out;
}

std::vector<TextSample> text_corpus(std::size_t n) {
  std::vector<TextSample> out;
  for (std::size_t k = 0; k < n; ++k) {
    const int i = static_cast<int>(k);
    out.push_back({i % 2, {20 + i % 32, 60 + i % 5, 61 + i % 7}});
  }
  return out;
}

TfIdfTable table_for(const std::vector<TextSample>& texts) {
  std::vector<std::vector<int>> docs;
  for (const auto& t : texts) docs.push_back(t.text);
  return TfIdfTable(docs);
}

std::vector<double> snapshot(const ParameterSet& params) {
  std::vector<double> out;
  for (const auto& [name, t] : params) out.insert(out.end(), t.data().begin(), t.data().end());
  return out;
}

}  // namespace

TEST(Schedule, WarmupPeakAndEndpoints) {
  EXPECT_EQ(learning_rate_at(0, 1000, 3e-5, 0.1), 0.0);
  EXPECT_DOUBLE_EQ(learning_rate_at(100, 1000, 3e-5, 0.1), 3e-5);
  EXPECT_DOUBLE_EQ(learning_rate_at(50, 1000, 3e-5, 0.1), 1.5e-5);
  EXPECT_DOUBLE_EQ(learning_rate_at(550, 1000, 3e-5, 0.1), 1.5e-5);
  EXPECT_EQ(learning_rate_at(1000, 1000, 3e-5, 0.1), 0.0);
  EXPECT_DOUBLE_EQ(learning_rate_at(0, 10, 1.0, 0.0), 1.0);
}

TEST(Schedule, PeakIsTheMaximum) {
  double best = 0.0;
  std::uint64_t at = 0;
  for (std::uint64_t s = 0; s <= 500; ++s) {
    const double lr = learning_rate_at(s, 500, 1.0, 0.1);
    if (lr > best) best = lr, at = s;
  }
  EXPECT_EQ(at, 50u);
  EXPECT_EQ(best, 1.0);
}

TEST(AdamW, MatchesHandRolledUpdate) {
  ParameterSet params;
  auto& w = params.add("w.weight", Tensor::from({2}, {0.5, -1.0}, true));
  AdamW opt(params, {0.9, 0.999, 1e-8, 0.1});
  const double grads[2][2] = {{0.2, -0.4}, {-0.1, 0.3}};
  double x[2] = {0.5, -1.0}, m[2] = {0, 0}, v[2] = {0, 0};
  for (int t = 1; t <= 2; ++t) {
    w.grad()[0] = grads[t - 1][0];
    w.grad()[1] = grads[t - 1][1];
    opt.step(params, 0.01);
    for (int k = 0; k < 2; ++k) {
      const double g = grads[t - 1][k];
      m[k] = 0.9 * m[k] + 0.1 * g;
      v[k] = 0.999 * v[k] + 0.001 * g * g;
      const double mh = m[k] / (1 - std::pow(0.9, t)), vh = v[k] / (1 - std::pow(0.999, t));
      x[k] -= 0.01 * (mh / (std::sqrt(vh) + 1e-8) + 0.1 * x[k]);
      EXPECT_NEAR(w.data()[k], x[k], 1e-15);
    }
  }
}

TEST(AdamW, ZeroLearningRateChangesNothing) {
  ConditionedTransformer model(toy_config(30, 8, 2, 2, 1, 2), 1);
  Rng rng(1);
  for (auto& [name, t] : model.parameters())
    for (auto& g : t.grad()) g = 2.0 * uniform01(rng) - 1.0;
  const auto before = snapshot(model.parameters());
  AdamW opt(model.parameters(), {});
  opt.step(model.parameters(), 0.0);
  EXPECT_EQ(snapshot(model.parameters()), before);
}

TEST(AdamW, DecayExemptionsAndFrozenParameters) {
  ConditionedTransformer model(toy_config(30, 8, 2, 2, 1, 2), 2);
  model.parameters().zero_grad();
  const auto before = model.parameters();
  std::map<std::string, std::vector<double>> old;
  for (const auto& [name, t] : model.parameters()) old[name].assign(t.data().begin(), t.data().end());
  AdamW opt(model.parameters(), {0.9, 0.999, 1e-6, 0.5}, {"condition."});
  opt.step(model.parameters(), 0.1);
  for (const auto& [name, t] : model.parameters()) {
    for (std::size_t k = 0; k < t.numel(); ++k) {
      const double expected = (decays(name) && name.rfind("condition.", 0) != 0) ? old[name][k] * (1 - 0.1 * 0.5)
                                                                                  : old[name][k];
      ASSERT_DOUBLE_EQ(t.data()[k], expected) << name;
    }
  }
  EXPECT_FALSE(decays("layers.0.attention_norm.gain"));
  EXPECT_FALSE(decays("lm_head.bias"));
  EXPECT_TRUE(decays("embeddings.token"));
}

TEST(AdamW, StateRoundTrip) {
  // Two optimizers over identical parameters; the second resumes from the
  // first one's saved state and must then track it exactly.
  auto w = Tensor::from({2}, {0.5, -1.0}, true);
  ParameterSet params;
  params.add("w.weight", w);
  AdamW a(params, {});
  w.grad()[0] = 0.3;
  a.step(params, 0.1);

  auto w2 = Tensor::from({2}, {w.data()[0], w.data()[1]}, true);
  ParameterSet resumed;
  resumed.add("w.weight", w2);
  AdamW b(resumed, {});
  b.load_state(a.state());
  EXPECT_EQ(b.steps(), 1u);

  for (auto* t : {&w, &w2}) {
    t->grad()[0] = 0.1;
    t->grad()[1] = -0.2;
  }
  a.step(params, 0.1);
  b.step(resumed, 0.1);
  EXPECT_EQ(w.data()[0], w2.data()[0]);
  EXPECT_EQ(w.data()[1], w2.data()[1]);
}

TEST(ClipGradNorm, RescalesToBound) {
  ParameterSet params;
  auto a = Tensor::from({2}, {0, 0}, true);
  auto b = Tensor::from({1}, {0}, true);
  params.add("a", a);
  params.add("b", b);
  a.grad()[0] = 3.0;
  a.grad()[1] = 0.0;
  b.grad()[0] = 4.0;
  EXPECT_DOUBLE_EQ(clip_grad_norm(params, 1.0), 5.0);
  EXPECT_DOUBLE_EQ(a.grad()[0], 0.6);
  EXPECT_DOUBLE_EQ(b.grad()[0], 0.8);
  EXPECT_DOUBLE_EQ(clip_grad_norm(params, 0.0), 1.0);
}

TEST(BatchLoss, PooledAverageOfSamples) {
  Rng rng(3);
  ConditionedTransformer model(toy_config(100, 8, 2, 2, 1, 2), 3);
  cdg::testing::spread_parameters(model, rng, 0.2);
  auto corpus = memorizable_corpus(6);
  std::vector<MaskedSample> samples;
  MaskingOptions heavy{0.6, false};
  for (const auto& d : corpus)
    samples.push_back(apply_random_masking(pack_dialogue(d, 32).value(), SampleKind::dialogue, rng, heavy, 100));
  NoGradGuard no_grad;
  const double pooled = batch_loss(model, samples, {}).item();
  double weighted = 0.0, count = 0.0;
  for (const auto& s : samples) {
    const double per_sample = batch_loss(model, {s}, {}).item();
    weighted += per_sample * static_cast<double>(s.masked_count());
    count += static_cast<double>(s.masked_count());
  }
  EXPECT_NEAR(pooled, weighted / count, 1e-12);
}

TEST(Validate, UntrainedModelIsNearVocabularySize) {
  ConditionedTransformer model(toy_config(100, 8, 2, 2, 1, 2), 4);
  auto corpus = memorizable_corpus(16);
  const double ppl = validate(model, corpus, 32, 0.25, 7);
  EXPECT_NEAR(ppl, 100.0, 5.0);
  EXPECT_EQ(ppl, validate(model, corpus, 32, 0.25, 7));
  EXPECT_THROW(validate(model, {}, 32, 0.25, 7), DataError);
}

TEST(ConfigureAblation, ResolvesFlags) {
  auto full = configure_ablation({});
  EXPECT_TRUE(full.use_conditions && full.use_text);
  EXPECT_EQ(full.text_policy, MaskPolicy::tfidf);
  EXPECT_EQ(full.mode(), "full");
  auto nc = configure_ablation({true, false, false, GateVariant::attention_routing});
  EXPECT_FALSE(nc.use_conditions);
  EXPECT_FALSE(nc.use_text);
  EXPECT_EQ(nc.mode(), "no_condition");
  auto nt = configure_ablation({false, true, false, GateVariant::attention_routing});
  EXPECT_TRUE(nt.use_conditions);
  EXPECT_FALSE(nt.use_text);
  auto nf = configure_ablation({false, false, true, GateVariant::attention_routing});
  EXPECT_EQ(nf.text_policy, MaskPolicy::random);
  EXPECT_EQ(nf.mode(), "no_tfidf");
  EXPECT_EQ(configure_ablation({false, false, false, GateVariant::single_gate}).mode(), "full+single_gate");
}

TEST(ConfigureAblation, ContradictionsAreConfigErrors) {
  EXPECT_THROW(configure_ablation({true, false, true, GateVariant::attention_routing}), ConfigError);
  EXPECT_THROW(configure_ablation({false, true, true, GateVariant::attention_routing}), ConfigError);
  EXPECT_THROW(configure_ablation({true, false, false, GateVariant::double_gates}), ConfigError);
  EXPECT_NO_THROW(configure_ablation({true, true, false, GateVariant::attention_routing}));
}

namespace {

struct ToyRun {
  std::vector<DialogueSample> dialogues = memorizable_corpus(32);
  std::vector<TextSample> texts = text_corpus(12);
  TfIdfTable table = table_for(texts);
};

TrainResult run(ConditionedTransformer& model, const ToyRun& data, const Pipeline& pipeline, const TrainConfig& cfg,
                const TrainHooks& hooks = {}) {
  SamplerConfig sc;
  sc.batch_size = cfg.batch_size;
  sc.max_length = model.config().max_length;
  sc.text_policy = pipeline.text_policy;
  sc.use_conditions = pipeline.use_conditions;
  const std::vector<TextSample> none;
  MixedBatchSampler sampler(data.dialogues, pipeline.use_text ? data.texts : none, &data.table, sc,
                            model.config().vocab_size, cfg.seed);
  return train(model, sampler, cfg, pipeline, hooks);
}

}  // namespace

TEST(Train, MemorizesSmallCorpus) {
  ToyRun data;
  auto mc = toy_config(100, 64, 2, 2, 1, 2);
  ConditionedTransformer model(mc, 5);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.batch_size = 8;
  cfg.learning_rate = 3e-3;
  cfg.weight_decay = 0.0;
  auto result = run(model, data, configure_ablation({false, true, false, GateVariant::attention_routing}), cfg);
  EXPECT_EQ(result.steps, 800u);
  EXPECT_LT(result.epoch_loss.back(), 0.1);
  EXPECT_LT(validate(model, data.dialogues, 32, 0.25, 1), 1.2);
}

TEST(Train, BitReproducibleWithFixedSeed) {
  ToyRun data;
  auto mc = toy_config(100, 8, 2, 2, 1, 2);
  mc.dropout = 0.1;
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 8;
  ConditionedTransformer a(mc, 6), b(mc, 6);
  auto ra = run(a, data, configure_ablation({}), cfg);
  auto rb = run(b, data, configure_ablation({}), cfg);
  EXPECT_EQ(ra.epoch_loss, rb.epoch_loss);
  EXPECT_EQ(snapshot(a.parameters()), snapshot(b.parameters()));
}

TEST(Train, NoConditionLeavesConditionTableUntouched) {
  ToyRun data;
  ConditionedTransformer model(toy_config(100, 8, 2, 2, 1, 2), 7);
  std::vector<double> before(model.condition_table().keys.data().begin(), model.condition_table().keys.data().end());
  before.insert(before.end(), model.condition_table().values.data().begin(), model.condition_table().values.data().end());
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 8;
  std::vector<nlohmann::json> records;
  run(model, data, configure_ablation({true, false, false, GateVariant::attention_routing}), cfg,
      {[&](const nlohmann::json& r) { records.push_back(r); }, {}, nullptr, 0.25, 0});
  std::vector<double> after(model.condition_table().keys.data().begin(), model.condition_table().keys.data().end());
  after.insert(after.end(), model.condition_table().values.data().begin(), model.condition_table().values.data().end());
  EXPECT_EQ(before, after);
  for (const auto& r : records)
    if (r["type"] == "step") {
      EXPECT_EQ(r["text"], 0);
    }
}

TEST(Train, NoCtextDrawsOnlyDialogue) {
  ToyRun data;
  ConditionedTransformer model(toy_config(100, 8, 2, 2, 1, 2), 8);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 8;
  std::size_t steps = 0;
  run(model, data, configure_ablation({false, true, false, GateVariant::attention_routing}), cfg,
      {[&](const nlohmann::json& r) {
         if (r["type"] != "step") return;
         ++steps;
         EXPECT_EQ(r["dialogue"], 8);
         EXPECT_EQ(r["text"], 0);
       },
       {}, nullptr, 0.25, 0});
  EXPECT_EQ(steps, 8u);
}

TEST(Train, LogsEpochsAndCallsEpochHook) {
  ToyRun data;
  ConditionedTransformer model(toy_config(100, 8, 2, 2, 1, 2), 9);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 8;
  std::vector<std::size_t> epochs;
  std::vector<double> ppl;
  TrainHooks hooks;
  hooks.log = [&](const nlohmann::json& r) {
    if (r["type"] == "epoch") ppl.push_back(r["validation_perplexity"].get<double>());
  };
  hooks.epoch_end = [&](std::size_t e, const AdamW& opt) {
    epochs.push_back(e);
    EXPECT_EQ(opt.steps(), e * 6);
  };
  hooks.validation = &data.dialogues;
  auto result = run(model, data, configure_ablation({}), cfg, hooks);
  EXPECT_EQ(epochs, (std::vector<std::size_t>{1, 2, 3}));
  EXPECT_EQ(ppl, result.validation_perplexity);
}

TEST(Train, NonFiniteLossAborts) {
  ToyRun data;
  ConditionedTransformer model(toy_config(100, 8, 2, 2, 1, 2), 10);
  model.parameters().get("lm_head.bias").data()[20] = std::numeric_limits<double>::quiet_NaN();
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 8;
  EXPECT_THROW(run(model, data, configure_ablation({}), cfg), NumericalError);
  EXPECT_EQ(Tape::current().size(), 0u);
}

TEST(TrainConfig, RejectsBadValues) {
  TrainConfig cfg;
  cfg.warmup_proportion = 1.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.learning_rate = -1;
  EXPECT_THROW(cfg.validate(), ConfigError);
}
