#include "cdg/model/config.hpp"

#include <nlohmann/json.hpp>

#include "cdg/common/errors.hpp"

namespace cdg {

GateVariant parse_gate_variant(std::string_view name) {
  if (name == "attention_routing" || name == "routing") return GateVariant::attention_routing;
  if (name == "single_gate") return GateVariant::single_gate;
  if (name == "double_gates") return GateVariant::double_gates;
  throw ConfigError("unknown gate variant '" + std::string(name) +
                    "' (expected attention_routing, single_gate or double_gates)");
}

std::string_view to_string(GateVariant variant) {
  switch (variant) {
    case GateVariant::attention_routing:
      return "attention_routing";
    case GateVariant::single_gate:
      return "single_gate";
    case GateVariant::double_gates:
      return "double_gates";
  }
  return "attention_routing";
}

void ModelConfig::validate() const {
  if (vocab_size == 0) throw ConfigError("model.vocab_size must be positive");
  if (hidden_size == 0 || num_heads == 0 || num_layers == 0) {
    throw ConfigError("model.hidden_size, model.num_heads and model.num_layers must be positive");
  }
  if (hidden_size % num_heads != 0) {
    throw ConfigError("model.hidden_size (" + std::to_string(hidden_size) + ") must be divisible by model.num_heads (" +
                      std::to_string(num_heads) + ")");
  }
  if (num_condition_layers > num_layers) {
    throw ConfigError("model.num_condition_layers cannot exceed model.num_layers");
  }
  if (max_length < 4) throw ConfigError("model.max_length must be at least 4");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("model.dropout must lie in [0, 1)");
  if (layer_norm_eps <= 0.0) throw ConfigError("model.layer_norm_eps must be positive");
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"vocab_size", c.vocab_size},
                     {"hidden_size", c.hidden_size},
                     {"num_layers", c.num_layers},
                     {"num_heads", c.num_heads},
                     {"ffn_size", c.effective_ffn_size()},
                     {"max_length", c.max_length},
                     {"num_condition_layers", c.num_condition_layers},
                     {"num_conditions", c.num_conditions},
                     {"dropout", c.dropout},
                     {"layer_norm_eps", c.layer_norm_eps},
                     {"gate", std::string(to_string(c.gate))}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  j.at("vocab_size").get_to(c.vocab_size);
  j.at("hidden_size").get_to(c.hidden_size);
  j.at("num_layers").get_to(c.num_layers);
  j.at("num_heads").get_to(c.num_heads);
  j.at("ffn_size").get_to(c.ffn_size);
  j.at("max_length").get_to(c.max_length);
  j.at("num_condition_layers").get_to(c.num_condition_layers);
  j.at("num_conditions").get_to(c.num_conditions);
  j.at("dropout").get_to(c.dropout);
  j.at("layer_norm_eps").get_to(c.layer_norm_eps);
  c.gate = parse_gate_variant(j.at("gate").get<std::string>());
}

}  // namespace cdg
