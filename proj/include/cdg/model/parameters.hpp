#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cdg/common/random.hpp"
#include "cdg/tensor/tensor.hpp"

namespace cdg {

// Named trainable tensors in a stable registration order.
class ParameterSet {
 public:
  Tensor& add(const std::string& name, Tensor tensor);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  const Tensor& get(const std::string& name) const;
  Tensor& get(const std::string& name);

  std::size_t size() const { return entries_.size(); }
  std::size_t element_count() const;
  // Elements of every tensor whose name starts with `prefix`.
  std::size_t element_count(const std::string& prefix) const;

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  void zero_grad() const;

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// LayerNorm gains and all biases are exempt from weight decay.
bool decays(const std::string& parameter_name);

// Normal(0, stddev) truncated to +-2 stddev, drawn by rejection.
double truncated_normal(Rng& rng, double stddev);

}  // namespace cdg
