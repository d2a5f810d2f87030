#include "cdg/training/trainer.hpp"

#include <chrono>
#include <cmath>

#include "cdg/common/errors.hpp"
#include "cdg/tensor/ops.hpp"
#include "cdg/tensor/tape.hpp"

namespace cdg {

void TrainConfig::validate() const {
  if (!(warmup_proportion >= 0.0 && warmup_proportion <= 1.0)) throw ConfigError("warmup_proportion must lie in [0, 1]");
  if (learning_rate < 0.0 || weight_decay < 0.0) throw ConfigError("learning rate and weight decay must be nonnegative");
  if (label_smoothing < 0.0 || label_smoothing >= 1.0) throw ConfigError("label_smoothing must lie in [0, 1)");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (epochs == 0) throw ConfigError("epochs must be positive");
}

std::string Pipeline::mode() const {
  std::string m = !use_conditions                ? "no_condition"
                  : !use_text                    ? "no_ctext"
                  : text_policy == MaskPolicy::random ? "no_tfidf"
                                                 : "full";
  if (gate != GateVariant::attention_routing) m += "+" + std::string(to_string(gate));
  return m;
}

Pipeline configure_ablation(const Ablation& a) {
  if (a.no_tfidf && (a.no_ctext || a.no_condition)) {
    throw ConfigError("no_tfidf cannot be combined with no_ctext or no_condition: there is no text to mask");
  }
  if (a.no_condition && a.gate != GateVariant::attention_routing) {
    throw ConfigError("gate variant " + std::string(to_string(a.gate)) + " has nothing to gate under no_condition");
  }
  Pipeline p;
  p.gate = a.gate;
  if (a.no_condition) {
    p.use_conditions = false;
    p.use_text = false;
    p.frozen_prefixes = {"condition."};
  }
  if (a.no_ctext) p.use_text = false;
  if (a.no_tfidf) p.text_policy = MaskPolicy::random;
  return p;
}

namespace {

std::vector<std::size_t> active_rows(const MaskedSample& s) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < s.active.size(); ++i)
    if (s.active[i]) rows.push_back(i);
  return rows;
}

}  // namespace

Tensor batch_loss(const ConditionedTransformer& model, const std::vector<MaskedSample>& samples,
                  const ForwardContext& ctx, double label_smoothing) {
  std::size_t total = 0;
  for (const auto& s : samples) total += s.masked_count();
  if (total == 0) throw DataError("no masked positions in batch");
  Tensor loss;
  for (const auto& s : samples) {
    const auto rows = active_rows(s);
    if (rows.empty()) continue;
    // The LM head only runs on masked rows.
    auto hidden = ops::gather_rows(model.encode(s.enc, ctx), rows);
    std::vector<int> targets;
    for (auto r : rows) targets.push_back(s.targets[r]);
    auto nll = ops::cross_entropy_masked(model.lm_head(hidden), targets, std::vector<bool>(rows.size(), true),
                                         label_smoothing);
    auto weighted = ops::scale(nll, static_cast<double>(rows.size()) / static_cast<double>(total));
    loss = loss.defined() ? ops::add(loss, weighted) : weighted;
  }
  return loss;
}

double validate(const ConditionedTransformer& model, const std::vector<DialogueSample>& dialogues,
                std::size_t max_length, double mask_probability, std::uint64_t seed) {
  if (dialogues.empty()) throw DataError("validation set is empty");
  NoGradGuard no_grad;
  Rng rng(seed);
  std::vector<MaskedSample> samples;
  for (const auto& d : dialogues) {
    if (auto enc = pack_dialogue(d, max_length)) {
      samples.push_back(apply_random_masking(*enc, SampleKind::dialogue, rng, {mask_probability, false},
                                             model.config().vocab_size));
    }
  }
  if (samples.empty()) throw DataError("validation set has no usable dialogues");
  return std::exp(batch_loss(model, samples, {}).item());
}

TrainResult train(ConditionedTransformer& model, MixedBatchSampler& sampler, const TrainConfig& config,
                  const Pipeline& pipeline, const TrainHooks& hooks) {
  config.validate();
  AdamW optimizer(model.parameters(), {0.9, 0.999, 1e-6, config.weight_decay}, pipeline.frozen_prefixes);
  Rng dropout_rng(derive_seed(config.seed, 2));
  const ForwardContext ctx{true, &dropout_rng};
  const std::uint64_t per_epoch = sampler.steps_per_epoch();
  const std::uint64_t total = per_epoch * config.epochs;
  const auto started = std::chrono::steady_clock::now();
  auto& tape = Tape::current();

  TrainResult result;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    double loss_sum = 0.0;
    for (std::uint64_t b = 0; b < per_epoch; ++b) {
      const auto batch = sampler.next();
      model.parameters().zero_grad();
      tape.clear();
      auto loss = batch_loss(model, batch.samples, ctx, config.label_smoothing);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        tape.clear();
        throw NumericalError("loss is " + std::to_string(value) + " at step " + std::to_string(result.steps));
      }
      backward(loss);
      const double norm = clip_grad_norm(model.parameters(), config.clip_norm);
      const double lr = learning_rate_at(result.steps, total, config.learning_rate, config.warmup_proportion);
      optimizer.step(model.parameters(), lr);
      ++result.steps;
      loss_sum += value;
      if (hooks.log) {
        hooks.log({{"type", "step"},
                   {"step", result.steps},
                   {"epoch", epoch},
                   {"loss", value},
                   {"learning_rate", lr},
                   {"grad_norm", norm},
                   {"dialogue", batch.dialogue_count},
                   {"text", batch.text_count}});
      }
    }
    result.epoch_loss.push_back(loss_sum / static_cast<double>(per_epoch));
    nlohmann::json record{{"type", "epoch"},
                          {"epoch", epoch},
                          {"step", result.steps},
                          {"mean_loss", result.epoch_loss.back()}};
    if (hooks.validation != nullptr && !hooks.validation->empty()) {
      const double ppl = validate(model, *hooks.validation, sampler.config().max_length, hooks.validation_mask_probability,
                                  hooks.validation_seed);
      result.validation_perplexity.push_back(ppl);
      record["validation_perplexity"] = ppl;
    }
    record["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (hooks.log) hooks.log(record);
    if (hooks.epoch_end) hooks.epoch_end(epoch, optimizer);
  }
  return result;
}

}  // namespace cdg
