#pragma once

#include <cstdint>
#include <vector>

#include "cdg/model/config.hpp"
#include "cdg/model/encoding.hpp"
#include "cdg/model/layers.hpp"
#include "cdg/model/parameters.hpp"

namespace cdg {

// One transformer stack used as both encoder and decoder through attention
// masks. The last num_condition_layers blocks are condition-aware; the LM head
// is tied to the token embedding table.
class ConditionedTransformer {
 public:
  // Fresh model: weights ~ truncated normal(0.02), biases 0, norm gains 1.
  ConditionedTransformer(ModelConfig config, std::uint64_t seed);
  // Model over existing parameters (e.g. from a checkpoint). Names and shapes
  // must match what the config implies.
  ConditionedTransformer(ModelConfig config, ParameterSet parameters);

  ConditionedTransformer(const ConditionedTransformer&) = delete;
  ConditionedTransformer& operator=(const ConditionedTransformer&) = delete;
  ConditionedTransformer(ConditionedTransformer&&) = default;

  const ModelConfig& config() const { return config_; }
  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }
  const ConditionTable& condition_table() const { return table_; }
  const BlockWeights& block(std::size_t layer) const { return blocks_.at(layer); }
  std::size_t parameter_count() const { return params_.element_count(); }

  // H^0 = token + position + type embeddings.
  Tensor embed(const InputEncoding& enc) const;
  // H^L.
  Tensor encode(const InputEncoding& enc, const ForwardContext& ctx = {}) const;
  // hidden[n, d] -> logits[n, V].
  Tensor lm_head(const Tensor& hidden) const;
  Tensor forward(const InputEncoding& enc, const ForwardContext& ctx = {}) const;

 private:
  void build_parameters(std::uint64_t seed);
  void bind();

  ModelConfig config_;
  ParameterSet params_;
  Tensor token_embedding_, position_embedding_, type_embedding_, output_bias_;
  std::vector<BlockWeights> blocks_;
  ConditionTable table_;
};

// Names of the parameters the given config implies, in registration order.
std::vector<std::pair<std::string, Shape>> parameter_layout(const ModelConfig& config);

}  // namespace cdg
