#include "cdg/training/optimizer.hpp"

#include <cmath>

#include "cdg/common/errors.hpp"

namespace cdg {

double learning_rate_at(std::uint64_t step, std::uint64_t total, double peak, double warmup_proportion) {
  if (total == 0 || step >= total) return 0.0;
  const double warmup = warmup_proportion * static_cast<double>(total);
  const double s = static_cast<double>(step);
  if (s < warmup) return peak * s / warmup;
  return peak * (static_cast<double>(total) - s) / (static_cast<double>(total) - warmup);
}

double clip_grad_norm(const ParameterSet& params, double max_norm) {
  double sq = 0.0;
  for (const auto& [name, t] : params)
    for (double g : t.grad()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double factor = max_norm / norm;
    for (const auto& [name, t] : params)
      for (double& g : t.grad()) g *= factor;
  }
  return norm;
}

AdamW::AdamW(const ParameterSet& params, AdamWConfig config, std::vector<std::string> frozen_prefixes)
    : config_(config), frozen_(std::move(frozen_prefixes)) {
  for (const auto& [name, t] : params) {
    names_.push_back(name);
    m_.push_back(Tensor::zeros(t.shape()));
    v_.push_back(Tensor::zeros(t.shape()));
  }
}

bool AdamW::frozen(const std::string& name) const {
  for (const auto& p : frozen_)
    if (name.rfind(p, 0) == 0) return true;
  return false;
}

void AdamW::step(ParameterSet& params, double lr) {
  ++steps_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  std::size_t i = 0;
  for (auto& [name, t] : params) {
    if (i >= names_.size() || names_[i] != name) throw UsageError("optimizer built for a different parameter set");
    if (frozen(name)) {
      ++i;
      continue;
    }
    const double decay = decays(name) ? config_.weight_decay : 0.0;
    auto w = t.data();
    auto g = t.grad();
    auto m = m_[i].data();
    auto v = v_[i].data();
    ++i;
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * g[k];
      v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * g[k] * g[k];
      const double update = (m[k] / c1) / (std::sqrt(v[k] / c2) + config_.epsilon) + decay * w[k];
      w[k] -= lr * update;
    }
  }
}

std::vector<std::pair<std::string, Tensor>> AdamW::state() const {
  std::vector<std::pair<std::string, Tensor>> out;
  for (std::size_t i = 0; i < names_.size(); ++i) out.emplace_back("adam.m." + names_[i], m_[i].clone());
  for (std::size_t i = 0; i < names_.size(); ++i) out.emplace_back("adam.v." + names_[i], v_[i].clone());
  out.emplace_back("adam.step", Tensor::from({1}, {static_cast<double>(steps_)}));
  return out;
}

void AdamW::load_state(const std::vector<std::pair<std::string, Tensor>>& state) {
  for (const auto& [key, t] : state) {
    if (key == "adam.step") {
      steps_ = static_cast<std::uint64_t>(t.item());
      continue;
    }
    const bool first = key.rfind("adam.m.", 0) == 0;
    const std::string name = key.substr(7);
    std::size_t i = 0;
    while (i < names_.size() && names_[i] != name) ++i;
    if (i == names_.size()) throw ConfigError("optimizer state for unknown parameter " + name);
    auto& dst = first ? m_[i] : v_[i];
    if (dst.shape() != t.shape()) throw ConfigError("optimizer state shape mismatch for " + name);
    std::copy(t.data().begin(), t.data().end(), dst.data().begin());
  }
}

}  // namespace cdg
