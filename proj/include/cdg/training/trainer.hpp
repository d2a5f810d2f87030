#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cdg/data/sampler.hpp"
#include "cdg/model/transformer.hpp"
#include "cdg/training/optimizer.hpp"

namespace cdg {

struct TrainConfig {
  double learning_rate = 1e-3;
  double warmup_proportion = 0.1;
  double weight_decay = 0.01;
  double label_smoothing = 0.0;
  double clip_norm = 1.0;  // <= 0 disables clipping
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;

  void validate() const;
};

struct Ablation {
  bool no_condition = false;
  bool no_ctext = false;
  bool no_tfidf = false;
  GateVariant gate = GateVariant::attention_routing;
};

// What a run actually does once the ablation flags are resolved.
struct Pipeline {
  bool use_conditions = true;
  bool use_text = true;
  MaskPolicy text_policy = MaskPolicy::tfidf;
  GateVariant gate = GateVariant::attention_routing;
  std::vector<std::string> frozen_prefixes;

  // "full", "no_condition", "no_ctext" or "no_tfidf", with a "+<gate>" suffix
  // for the gate variants.
  std::string mode() const;
};

// Throws ConfigError for contradictory flags: no_tfidf with no_ctext or
// no_condition (no text left to mask), or a parametric gate with
// no_condition (nothing to gate).
Pipeline configure_ablation(const Ablation& ablation);

// Pooled masked-LM loss: the mean NLL over every active position of every
// sample, so each sample weighs in by its number of masked positions.
Tensor batch_loss(const ConditionedTransformer& model, const std::vector<MaskedSample>& samples,
                  const ForwardContext& ctx, double label_smoothing = 0.0);

// exp(mean NLL) over masked positions of the held-out dialogues, with the
// masks drawn from Rng(seed). Dropout off.
double validate(const ConditionedTransformer& model, const std::vector<DialogueSample>& dialogues,
                std::size_t max_length, double mask_probability, std::uint64_t seed);

struct TrainHooks {
  std::function<void(const nlohmann::json&)> log;  // one record per step / epoch
  // Called after every completed epoch with the optimizer, e.g. to checkpoint.
  std::function<void(std::size_t epoch, const AdamW&)> epoch_end;
  const std::vector<DialogueSample>* validation = nullptr;
  double validation_mask_probability = 0.25;
  std::uint64_t validation_seed = 0;
};

struct TrainResult {
  std::uint64_t steps = 0;
  std::vector<double> epoch_loss;  // mean batch loss per epoch
  std::vector<double> validation_perplexity;
};

// Throws NumericalError as soon as a batch loss is not finite; parameters are
// left as they were after the last good step.
TrainResult train(ConditionedTransformer& model, MixedBatchSampler& sampler, const TrainConfig& config,
                  const Pipeline& pipeline, const TrainHooks& hooks = {});

}  // namespace cdg
