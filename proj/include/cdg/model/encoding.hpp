#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "cdg/tensor/tensor.hpp"

namespace cdg {

inline constexpr int kNoCondition = -1;
inline constexpr double kBlocked = -std::numeric_limits<double>::infinity();

// Additive n x n self-attention mask: entry (i, j) is 0 when position i may
// attend to position j and -inf otherwise.
class AttentionMask {
 public:
  AttentionMask() = default;
  explicit AttentionMask(std::size_t n) : n_(n), values_(n * n, kBlocked) {}

  // Every position sees every position.
  static AttentionMask bidirectional(std::size_t n);
  // Position i sees positions j <= i.
  static AttentionMask causal(std::size_t n);
  // Source block fully visible to everyone, source never sees target, target
  // is causal among itself.
  static AttentionMask source_target(std::size_t source_length, std::size_t target_length);

  std::size_t size() const { return n_; }
  bool open(std::size_t i, std::size_t j) const { return values_[i * n_ + j] == 0.0; }
  void set_open(std::size_t i, std::size_t j, bool open) { values_[i * n_ + j] = open ? 0.0 : kBlocked; }
  const std::vector<double>& values() const { return values_; }

  Tensor tensor() const;
  bool every_row_has_open_entry() const;

 private:
  std::size_t n_ = 0;
  std::vector<double> values_;
};

// Packed model input. type 0 marks source-side positions, type 1 target-side.
struct InputEncoding {
  std::vector<int> token_ids;
  std::vector<int> position_ids;
  std::vector<int> type_ids;
  AttentionMask mask;
  int condition_id = kNoCondition;

  std::size_t size() const { return token_ids.size(); }
  std::size_t source_length() const;
  bool is_target(std::size_t i) const { return type_ids[i] == 1; }

  // Throws DimensionError / DataError when the structural invariants fail.
  void validate() const;
};

// n x 2 mask over the (condition, generic) routes: the condition route is
// blocked on source positions, the generic route is always open.
class ConditionBiasMask {
 public:
  explicit ConditionBiasMask(const std::vector<int>& type_ids);

  std::size_t size() const { return target_.size(); }
  bool condition_open(std::size_t i) const { return target_[i]; }
  Tensor tensor() const;
  // [n, 1] column with 1 on target rows and 0 on source rows.
  Tensor target_column() const;

 private:
  std::vector<bool> target_;
};

}  // namespace cdg
