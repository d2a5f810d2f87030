#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include <nlohmann/json_fwd.hpp>

namespace cdg {

enum class GateVariant { attention_routing, single_gate, double_gates };

GateVariant parse_gate_variant(std::string_view name);
std::string_view to_string(GateVariant variant);

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t hidden_size = 32;
  std::size_t num_layers = 3;
  std::size_t num_heads = 2;
  std::size_t ffn_size = 0;  // 0 means 4 * hidden_size
  std::size_t max_length = 64;
  std::size_t num_condition_layers = 2;
  std::size_t num_conditions = 0;
  double dropout = 0.1;
  double layer_norm_eps = 1e-12;
  GateVariant gate = GateVariant::attention_routing;

  std::size_t head_dim() const { return hidden_size / num_heads; }
  std::size_t effective_ffn_size() const { return ffn_size == 0 ? 4 * hidden_size : ffn_size; }
  // Index of the first condition-aware layer.
  std::size_t first_condition_layer() const { return num_layers - num_condition_layers; }

  // Throws ConfigError when the invariants do not hold.
  void validate() const;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

}  // namespace cdg
