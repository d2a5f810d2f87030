#include "cdg/tensor/tape.hpp"

#include <algorithm>
#include <cmath>

#include "cdg/common/errors.hpp"

namespace cdg {
namespace {

thread_local bool t_grad_enabled = true;

}  // namespace

Tape& Tape::current() {
  thread_local Tape tape;
  return tape;
}

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

void Tape::record(Tensor output, BackwardFn backward) {
  entries_.push_back(Entry{std::move(output), std::move(backward)});
}

bool Tape::contains(const Tensor& t) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const Entry& e) { return e.output.id() == t.id(); });
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw UsageError("backward() requires a scalar loss");
  }
  auto it = std::find_if(entries_.rbegin(), entries_.rend(),
                         [&](const Entry& e) { return e.output.id() == loss.id(); });
  if (it == entries_.rend()) {
    throw UsageError("backward() on a tensor that is not on the tape");
  }
  loss.grad()[0] += 1.0;
  for (; it != entries_.rend(); ++it) it->backward();
  entries_.clear();
}

}  // namespace cdg
