#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cdg/model/parameters.hpp"

namespace cdg {

// Linear warmup from 0 to `peak` over warmup_proportion * total steps, then
// linear decay to 0 at `total`.
double learning_rate_at(std::uint64_t step, std::uint64_t total, double peak, double warmup_proportion);

// Rescales all gradients in place so their joint L2 norm is at most max_norm.
// Returns the norm before clipping. max_norm <= 0 only measures.
double clip_grad_norm(const ParameterSet& params, double max_norm);

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-6;
  double weight_decay = 0.01;
};

// Adam with decoupled weight decay and bias correction. Parameters for which
// decays(name) is false get no decay; names starting with a frozen prefix are
// never touched.
class AdamW {
 public:
  AdamW(const ParameterSet& params, AdamWConfig config, std::vector<std::string> frozen_prefixes = {});

  void step(ParameterSet& params, double learning_rate);
  std::uint64_t steps() const { return steps_; }
  bool frozen(const std::string& name) const;

  // Moments as named tensors ("adam.m.<param>", "adam.v.<param>") plus a
  // one-element "adam.step".
  std::vector<std::pair<std::string, Tensor>> state() const;
  void load_state(const std::vector<std::pair<std::string, Tensor>>& state);

 private:
  AdamWConfig config_;
  std::vector<std::string> frozen_;
  std::vector<std::string> names_;
  std::vector<Tensor> m_, v_;
  std::uint64_t steps_ = 0;
};

}  // namespace cdg
