#pragma once

#include <cstddef>

#include "cdg/common/random.hpp"
#include "cdg/model/config.hpp"
#include "cdg/model/encoding.hpp"
#include "cdg/tensor/tensor.hpp"

namespace cdg {

struct ForwardContext {
  bool training = false;
  Rng* rng = nullptr;  // required when training with dropout > 0
};

struct AttentionWeights {
  Tensor query_weight, query_bias;
  Tensor key_weight, key_bias;
  Tensor value_weight, value_bias;
  Tensor output_weight, output_bias;
};

struct FeedForwardWeights {
  Tensor input_weight, input_bias;
  Tensor output_weight, output_bias;
};

struct NormWeights {
  Tensor gain, bias;
};

// Parametric gates of the ablation variants. single_gate uses only the
// hidden gate; double_gates adds a gate on the condition value vector.
struct GateWeights {
  Tensor hidden_weight, hidden_bias;
  Tensor condition_weight, condition_bias;
};

struct BlockWeights {
  AttentionWeights attention;
  NormWeights attention_norm;
  FeedForwardWeights ffn;
  NormWeights ffn_norm;
  GateWeights gate;
};

// Per-condition key and value rows plus the generic-route key. The generic
// value is the constant zero vector and is not stored.
struct ConditionTable {
  Tensor keys;         // [C, d]
  Tensor values;       // [C, d]
  Tensor generic_key;  // [1, d]

  std::size_t num_conditions() const { return keys.defined() ? keys.dim(0) : 0; }
  std::size_t parameter_count() const;
};

// Everything a condition-aware block needs beyond the plain block.
struct ConditionInput {
  int condition_id = kNoCondition;
  const ConditionTable* table = nullptr;
  const ConditionBiasMask* bias_mask = nullptr;
  GateVariant variant = GateVariant::attention_routing;
  std::size_t head_dim = 1;
};

// softmax(Q_j K_j^T / sqrt(d_k) + M) V_j per head, concatenated and projected.
Tensor masked_multi_head_attention(const Tensor& hidden, const Tensor& mask, const AttentionWeights& weights,
                                   std::size_t num_heads, double dropout, const ForwardContext& ctx);

// [n, 2] attention weights over the (condition, generic) routes.
Tensor routing_weights(const Tensor& contextual, int condition_id, const ConditionTable& table,
                       const ConditionBiasMask& bias_mask, std::size_t head_dim);

// Condition bias B = softmax(C [k^c, k^g]^T / sqrt(d_k) + M_b) [v^c, 0].
// Zero when condition_id is kNoCondition.
Tensor attention_routing(const Tensor& contextual, int condition_id, const ConditionTable& table,
                         const ConditionBiasMask& bias_mask, std::size_t head_dim);

// Bias of the single_gate variant: sigmoid(g(c_t)) v^c on target rows.
Tensor parametric_gate_bias(const Tensor& contextual, int condition_id, const ConditionTable& table,
                            const ConditionBiasMask& bias_mask, const GateWeights& gate);

// C' as consumed by the rest of a condition-aware block. attention_routing and
// single_gate add their bias; double_gates forms w_t c_t + u v^c on target rows
// and leaves source rows untouched. Returns `contextual` itself when there is
// no condition.
Tensor combine_condition(const Tensor& contextual, const ConditionInput& condition, const GateWeights& gate);

// Post-norm block: X = LN(H + Attn(H)), H' = LN(X + FFN(X)). With a condition
// input the attention output is replaced by combine_condition(Attn(H)).
Tensor transformer_block(const Tensor& hidden, const Tensor& mask, const BlockWeights& weights,
                         const ModelConfig& config, const ForwardContext& ctx,
                         const ConditionInput* condition = nullptr);

}  // namespace cdg
