#include "cdg/model/layers.hpp"

#include <cmath>
#include <vector>

#include "cdg/common/errors.hpp"
#include "cdg/tensor/ops.hpp"

namespace cdg {
namespace {

Tensor affine(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  return ops::add_bias(ops::matmul(x, weight), bias);
}

Tensor maybe_dropout(const Tensor& x, double p, const ForwardContext& ctx) {
  if (!ctx.training || p <= 0.0) return x;
  if (ctx.rng == nullptr) throw UsageError("training forward with dropout needs an RNG");
  return ops::dropout(x, p, true, *ctx.rng);
}

void check_condition(int condition_id, const ConditionTable& table) {
  if (condition_id < 0 || static_cast<std::size_t>(condition_id) >= table.num_conditions()) {
    throw VocabularyError("condition id " + std::to_string(condition_id) + " outside table of " +
                          std::to_string(table.num_conditions()) + " conditions");
  }
}

Tensor condition_row(const Tensor& rows, int condition_id) {
  const std::size_t idx = static_cast<std::size_t>(condition_id);
  return ops::gather_rows(rows, std::span<const std::size_t>(&idx, 1));
}

}  // namespace

std::size_t ConditionTable::parameter_count() const {
  if (!keys.defined()) return 0;
  return keys.numel() + values.numel() + generic_key.numel();
}

Tensor masked_multi_head_attention(const Tensor& hidden, const Tensor& mask, const AttentionWeights& w,
                                   std::size_t num_heads, double dropout, const ForwardContext& ctx) {
  const std::size_t d = hidden.dim(1);
  const std::size_t head_dim = d / num_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  auto q = affine(hidden, w.query_weight, w.query_bias);
  auto k = affine(hidden, w.key_weight, w.key_bias);
  auto v = affine(hidden, w.value_weight, w.value_bias);
  std::vector<Tensor> heads;
  heads.reserve(num_heads);
  for (std::size_t h = 0; h < num_heads; ++h) {
    auto qh = ops::slice_cols(q, h * head_dim, head_dim);
    auto kh = ops::slice_cols(k, h * head_dim, head_dim);
    auto vh = ops::slice_cols(v, h * head_dim, head_dim);
    auto scores = ops::add(ops::scale(ops::matmul_transposed(qh, kh), scale), mask);
    auto probs = maybe_dropout(ops::softmax_lastdim(scores), dropout, ctx);
    heads.push_back(ops::matmul(probs, vh));
  }
  auto concat = num_heads == 1 ? heads.front() : ops::concat_cols(heads);
  return affine(concat, w.output_weight, w.output_bias);
}

Tensor routing_weights(const Tensor& contextual, int condition_id, const ConditionTable& table,
                       const ConditionBiasMask& bias_mask, std::size_t head_dim) {
  check_condition(condition_id, table);
  if (bias_mask.size() != contextual.dim(0)) {
    throw DimensionError("condition bias mask covers " + std::to_string(bias_mask.size()) + " positions, input has " +
                         std::to_string(contextual.dim(0)));
  }
  auto route_keys = ops::concat_rows({condition_row(table.keys, condition_id), table.generic_key});
  auto logits = ops::scale(ops::matmul_transposed(contextual, route_keys), 1.0 / std::sqrt(static_cast<double>(head_dim)));
  return ops::softmax_lastdim(ops::add(logits, bias_mask.tensor()));
}

Tensor attention_routing(const Tensor& contextual, int condition_id, const ConditionTable& table,
                         const ConditionBiasMask& bias_mask, std::size_t head_dim) {
  if (condition_id == kNoCondition) return Tensor::zeros(contextual.shape());
  auto weights = routing_weights(contextual, condition_id, table, bias_mask, head_dim);
  auto route_values = ops::concat_rows({condition_row(table.values, condition_id), Tensor::zeros({1, contextual.dim(1)})});
  return ops::matmul(weights, route_values);
}

Tensor parametric_gate_bias(const Tensor& contextual, int condition_id, const ConditionTable& table,
                            const ConditionBiasMask& bias_mask, const GateWeights& gate) {
  if (condition_id == kNoCondition) return Tensor::zeros(contextual.shape());
  check_condition(condition_id, table);
  auto w = ops::sigmoid(affine(contextual, gate.hidden_weight, gate.hidden_bias));  // [n, 1]
  auto w_target = ops::mul(w, bias_mask.target_column());
  return ops::matmul(w_target, condition_row(table.values, condition_id));
}

Tensor combine_condition(const Tensor& contextual, const ConditionInput& condition, const GateWeights& gate) {
  if (condition.condition_id == kNoCondition) return contextual;
  if (condition.table == nullptr || condition.bias_mask == nullptr) {
    throw UsageError("condition-aware block without a condition table or bias mask");
  }
  const auto& table = *condition.table;
  const auto& bias_mask = *condition.bias_mask;
  switch (condition.variant) {
    case GateVariant::attention_routing:
      return ops::add(contextual,
                      attention_routing(contextual, condition.condition_id, table, bias_mask, condition.head_dim));
    case GateVariant::single_gate:
      return ops::add(contextual, parametric_gate_bias(contextual, condition.condition_id, table, bias_mask, gate));
    case GateVariant::double_gates: {
      check_condition(condition.condition_id, table);
      auto target = bias_mask.target_column();
      auto source = ops::add_scalar(ops::scale(target, -1.0), 1.0);
      auto w = ops::sigmoid(affine(contextual, gate.hidden_weight, gate.hidden_bias));
      auto w_rows = ops::add(ops::mul(w, target), source);  // 1 on source rows
      auto value = condition_row(table.values, condition.condition_id);
      auto u = ops::sigmoid(affine(value, gate.condition_weight, gate.condition_bias));  // [1, 1]
      auto bias = ops::matmul(target, ops::matmul(u, value));
      return ops::add(ops::scale_rows(contextual, w_rows), bias);
    }
  }
  throw ConfigError("unknown gate variant");
}

Tensor transformer_block(const Tensor& hidden, const Tensor& mask, const BlockWeights& w, const ModelConfig& config,
                         const ForwardContext& ctx, const ConditionInput* condition) {
  auto attended = masked_multi_head_attention(hidden, mask, w.attention, config.num_heads, config.dropout, ctx);
  attended = maybe_dropout(attended, config.dropout, ctx);
  if (condition != nullptr) attended = combine_condition(attended, *condition, w.gate);
  auto x = ops::layer_norm(ops::add(hidden, attended), w.attention_norm.gain, w.attention_norm.bias,
                           config.layer_norm_eps);
  auto ff = affine(ops::gelu(affine(x, w.ffn.input_weight, w.ffn.input_bias)), w.ffn.output_weight, w.ffn.output_bias);
  ff = maybe_dropout(ff, config.dropout, ctx);
  return ops::layer_norm(ops::add(x, ff), w.ffn_norm.gain, w.ffn_norm.bias, config.layer_norm_eps);
}

}  // namespace cdg
