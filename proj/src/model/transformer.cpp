#include "cdg/model/transformer.hpp"

#include <string>

#include "cdg/common/errors.hpp"
#include "cdg/tensor/ops.hpp"

namespace cdg {
namespace {

enum class Init { normal, zeros, ones };

Init init_for(const std::string& name) {
  auto ends_with = [&](const char* suffix) {
    const std::string s(suffix);
    return name.size() >= s.size() && name.compare(name.size() - s.size(), s.size(), s) == 0;
  };
  if (ends_with(".gain")) return Init::ones;
  if (ends_with(".bias")) return Init::zeros;
  return Init::normal;
}

std::string layer_prefix(std::size_t i) { return "layers." + std::to_string(i) + "."; }

}  // namespace

std::vector<std::pair<std::string, Shape>> parameter_layout(const ModelConfig& c) {
  const std::size_t d = c.hidden_size, f = c.effective_ffn_size();
  std::vector<std::pair<std::string, Shape>> layout{
      {"embeddings.token", {c.vocab_size, d}},
      {"embeddings.position", {c.max_length, d}},
      {"embeddings.type", {2, d}},
  };
  for (std::size_t i = 0; i < c.num_layers; ++i) {
    const auto p = layer_prefix(i);
    for (const char* proj : {"query", "key", "value", "output"}) {
      layout.push_back({p + "attention." + proj + ".weight", {d, d}});
      layout.push_back({p + "attention." + proj + ".bias", {d}});
    }
    layout.push_back({p + "attention_norm.gain", {d}});
    layout.push_back({p + "attention_norm.bias", {d}});
    layout.push_back({p + "ffn.input.weight", {d, f}});
    layout.push_back({p + "ffn.input.bias", {f}});
    layout.push_back({p + "ffn.output.weight", {f, d}});
    layout.push_back({p + "ffn.output.bias", {d}});
    layout.push_back({p + "ffn_norm.gain", {d}});
    layout.push_back({p + "ffn_norm.bias", {d}});
    if (i >= c.first_condition_layer() && c.num_conditions > 0) {
      if (c.gate != GateVariant::attention_routing) {
        layout.push_back({p + "gate.hidden.weight", {d, 1}});
        layout.push_back({p + "gate.hidden.bias", {1}});
      }
      if (c.gate == GateVariant::double_gates) {
        layout.push_back({p + "gate.condition.weight", {d, 1}});
        layout.push_back({p + "gate.condition.bias", {1}});
      }
    }
  }
  if (c.num_conditions > 0) {
    layout.push_back({"condition.keys", {c.num_conditions, d}});
    layout.push_back({"condition.values", {c.num_conditions, d}});
    layout.push_back({"condition.generic_key", {1, d}});
  }
  layout.push_back({"lm_head.bias", {c.vocab_size}});
  return layout;
}

ConditionedTransformer::ConditionedTransformer(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  build_parameters(seed);
  bind();
}

ConditionedTransformer::ConditionedTransformer(ModelConfig config, ParameterSet parameters)
    : config_(std::move(config)), params_(std::move(parameters)) {
  config_.validate();
  const auto layout = parameter_layout(config_);
  if (layout.size() != params_.size()) {
    throw ConfigError("parameter set has " + std::to_string(params_.size()) + " tensors, config implies " +
                      std::to_string(layout.size()));
  }
  for (const auto& [name, shape] : layout) {
    if (!params_.contains(name)) throw ConfigError("missing parameter " + name);
    if (params_.get(name).shape() != shape) {
      throw ConfigError("parameter " + name + " has shape " + shape_string(params_.get(name).shape()) + ", expected " +
                        shape_string(shape));
    }
  }
  bind();
}

void ConditionedTransformer::build_parameters(std::uint64_t seed) {
  Rng rng(seed);
  for (const auto& [name, shape] : parameter_layout(config_)) {
    auto t = Tensor::zeros(shape, true);
    switch (init_for(name)) {
      case Init::ones:
        for (auto& v : t.data()) v = 1.0;
        break;
      case Init::zeros:
        break;
      case Init::normal:
        for (auto& v : t.data()) v = truncated_normal(rng, 0.02);
        break;
    }
    params_.add(name, std::move(t));
  }
}

void ConditionedTransformer::bind() {
  token_embedding_ = params_.get("embeddings.token");
  position_embedding_ = params_.get("embeddings.position");
  type_embedding_ = params_.get("embeddings.type");
  output_bias_ = params_.get("lm_head.bias");
  blocks_.clear();
  for (std::size_t i = 0; i < config_.num_layers; ++i) {
    const auto p = layer_prefix(i);
    BlockWeights b;
    auto& a = b.attention;
    a.query_weight = params_.get(p + "attention.query.weight");
    a.query_bias = params_.get(p + "attention.query.bias");
    a.key_weight = params_.get(p + "attention.key.weight");
    a.key_bias = params_.get(p + "attention.key.bias");
    a.value_weight = params_.get(p + "attention.value.weight");
    a.value_bias = params_.get(p + "attention.value.bias");
    a.output_weight = params_.get(p + "attention.output.weight");
    a.output_bias = params_.get(p + "attention.output.bias");
    b.attention_norm = {params_.get(p + "attention_norm.gain"), params_.get(p + "attention_norm.bias")};
    b.ffn.input_weight = params_.get(p + "ffn.input.weight");
    b.ffn.input_bias = params_.get(p + "ffn.input.bias");
    b.ffn.output_weight = params_.get(p + "ffn.output.weight");
    b.ffn.output_bias = params_.get(p + "ffn.output.bias");
    b.ffn_norm = {params_.get(p + "ffn_norm.gain"), params_.get(p + "ffn_norm.bias")};
    if (params_.contains(p + "gate.hidden.weight")) {
      b.gate.hidden_weight = params_.get(p + "gate.hidden.weight");
      b.gate.hidden_bias = params_.get(p + "gate.hidden.bias");
    }
    if (params_.contains(p + "gate.condition.weight")) {
      b.gate.condition_weight = params_.get(p + "gate.condition.weight");
      b.gate.condition_bias = params_.get(p + "gate.condition.bias");
    }
    blocks_.push_back(std::move(b));
  }
  if (config_.num_conditions > 0) {
    table_.keys = params_.get("condition.keys");
    table_.values = params_.get("condition.values");
    table_.generic_key = params_.get("condition.generic_key");
  }
}

Tensor ConditionedTransformer::embed(const InputEncoding& enc) const {
  if (enc.size() > config_.max_length) {
    throw LengthError("sequence of length " + std::to_string(enc.size()) + " exceeds max_length " +
                      std::to_string(config_.max_length));
  }
  auto sum = ops::add(ops::embedding(token_embedding_, enc.token_ids), ops::embedding(position_embedding_, enc.position_ids));
  return ops::add(sum, ops::embedding(type_embedding_, enc.type_ids));
}

Tensor ConditionedTransformer::encode(const InputEncoding& enc, const ForwardContext& ctx) const {
  auto hidden = embed(enc);
  if (ctx.training && config_.dropout > 0.0) {
    if (ctx.rng == nullptr) throw UsageError("training forward with dropout needs an RNG");
    hidden = ops::dropout(hidden, config_.dropout, true, *ctx.rng);
  }
  const auto mask = enc.mask.tensor();
  if (enc.condition_id != kNoCondition && config_.num_conditions == 0) {
    throw ConfigError("conditioned input for a model without a condition table");
  }
  const ConditionBiasMask bias_mask(enc.type_ids);
  ConditionInput condition{enc.condition_id, &table_, &bias_mask, config_.gate, config_.head_dim()};
  for (std::size_t i = 0; i < config_.num_layers; ++i) {
    const bool aware = i >= config_.first_condition_layer() && enc.condition_id != kNoCondition;
    hidden = transformer_block(hidden, mask, blocks_[i], config_, ctx, aware ? &condition : nullptr);
  }
  return hidden;
}

Tensor ConditionedTransformer::lm_head(const Tensor& hidden) const {
  return ops::add_bias(ops::matmul_transposed(hidden, token_embedding_), output_bias_);
}

Tensor ConditionedTransformer::forward(const InputEncoding& enc, const ForwardContext& ctx) const {
  return lm_head(encode(enc, ctx));
}

}  // namespace cdg
