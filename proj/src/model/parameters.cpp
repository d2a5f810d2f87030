#include "cdg/model/parameters.hpp"

#include <cmath>

#include "cdg/common/errors.hpp"

namespace cdg {

Tensor& ParameterSet::add(const std::string& name, Tensor tensor) {
  if (contains(name)) throw UsageError("duplicate parameter name " + name);
  index_.emplace(name, entries_.size());
  entries_.emplace_back(name, std::move(tensor));
  return entries_.back().second;
}

const Tensor& ParameterSet::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw UsageError("unknown parameter " + name);
  return entries_[it->second].second;
}

Tensor& ParameterSet::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw UsageError("unknown parameter " + name);
  return entries_[it->second].second;
}

std::size_t ParameterSet::element_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : entries_) n += t.numel();
  return n;
}

std::size_t ParameterSet::element_count(const std::string& prefix) const {
  std::size_t n = 0;
  for (const auto& [name, t] : entries_) {
    if (name.rfind(prefix, 0) == 0) n += t.numel();
  }
  return n;
}

void ParameterSet::zero_grad() const {
  for (const auto& [name, t] : entries_) t.zero_grad();
}

bool decays(const std::string& name) {
  auto ends_with = [&](const std::string& suffix) {
    return name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  return !(ends_with(".bias") || ends_with(".gain"));
}

double truncated_normal(Rng& rng, double stddev) {
  constexpr double two_pi = 6.28318530717958647692;
  for (;;) {
    const double u1 = 1.0 - uniform01(rng);
    const double u2 = uniform01(rng);
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    if (std::abs(z) <= 2.0) return z * stddev;
  }
}

}  // namespace cdg
