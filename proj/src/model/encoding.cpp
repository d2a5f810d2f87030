#include "cdg/model/encoding.hpp"

#include <algorithm>
#include <string>

#include "cdg/common/errors.hpp"

namespace cdg {

AttentionMask AttentionMask::bidirectional(std::size_t n) {
  AttentionMask m(n);
  std::fill(m.values_.begin(), m.values_.end(), 0.0);
  return m;
}

AttentionMask AttentionMask::causal(std::size_t n) {
  AttentionMask m(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) m.set_open(i, j, true);
  return m;
}

AttentionMask AttentionMask::source_target(std::size_t source_length, std::size_t target_length) {
  const std::size_t n = source_length + target_length;
  AttentionMask m(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < source_length; ++j) m.set_open(i, j, true);
    if (i >= source_length) {
      for (std::size_t j = source_length; j <= i; ++j) m.set_open(i, j, true);
    }
  }
  return m;
}

Tensor AttentionMask::tensor() const { return Tensor::from({n_, n_}, values_); }

bool AttentionMask::every_row_has_open_entry() const {
  for (std::size_t i = 0; i < n_; ++i) {
    bool any = false;
    for (std::size_t j = 0; j < n_ && !any; ++j) any = open(i, j);
    if (!any) return false;
  }
  return true;
}

std::size_t InputEncoding::source_length() const {
  return static_cast<std::size_t>(std::count(type_ids.begin(), type_ids.end(), 0));
}

void InputEncoding::validate() const {
  const std::size_t n = token_ids.size();
  if (n == 0) throw DataError("empty input encoding");
  if (position_ids.size() != n || type_ids.size() != n || mask.size() != n) {
    throw DimensionError("input encoding fields disagree in length (" + std::to_string(n) + " tokens)");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (type_ids[i] != 0 && type_ids[i] != 1) throw DataError("type id must be 0 or 1");
    if (i > 0 && type_ids[i] < type_ids[i - 1]) throw DataError("type ids must be non-decreasing");
  }
  for (double v : mask.values()) {
    if (v != 0.0 && v != kBlocked) throw DataError("attention mask entries must be 0 or -inf");
  }
  if (!mask.every_row_has_open_entry()) throw DataError("attention mask has a fully blocked row");
}

ConditionBiasMask::ConditionBiasMask(const std::vector<int>& type_ids) : target_(type_ids.size()) {
  for (std::size_t i = 0; i < type_ids.size(); ++i) target_[i] = type_ids[i] == 1;
}

Tensor ConditionBiasMask::tensor() const {
  std::vector<double> v(target_.size() * 2, 0.0);
  for (std::size_t i = 0; i < target_.size(); ++i) {
    if (!target_[i]) v[i * 2] = kBlocked;
  }
  return Tensor::from({target_.size(), 2}, std::move(v));
}

Tensor ConditionBiasMask::target_column() const {
  std::vector<double> v(target_.size());
  for (std::size_t i = 0; i < target_.size(); ++i) v[i] = target_[i] ? 1.0 : 0.0;
  return Tensor::from({target_.size(), 1}, std::move(v));
}

}  // namespace cdg
