#pragma once

#include <functional>
#include <vector>

#include "cdg/tensor/tensor.hpp"

namespace cdg {

// Define-by-run record of differentiable operations. Each thread owns one
// tape; ops record onto the calling thread's tape while grad mode is on.
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  static Tape& current();

  void record(Tensor output, BackwardFn backward);

  // Accumulates d(loss)/d(t) into every requires-grad ancestor of `loss`,
  // replaying recorded ops in reverse. The tape is cleared afterwards.
  void backward(const Tensor& loss);

  void clear() { entries_.clear(); }
  std::size_t size() const { return entries_.size(); }
  bool contains(const Tensor& t) const;

 private:
  struct Entry {
    Tensor output;
    BackwardFn backward;
  };
  std::vector<Entry> entries_;
};

bool grad_enabled();

// Disables recording for its lifetime (inference, parameter updates).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

inline void backward(const Tensor& loss) { Tape::current().backward(loss); }

}  // namespace cdg
