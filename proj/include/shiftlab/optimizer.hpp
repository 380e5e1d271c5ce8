#pragma once

#include <cstdint>
#include <span>

#include "shiftlab/tensor.hpp"

namespace shiftlab {

// Step decay: full rate through decay_at, multiplied by factor afterwards.
struct LrSchedule {
  int64_t decay_at = 600;
  double factor = 0.1;
};

// base_lr * factor^(number of passed boundaries); step > decay_at counts as
// one passed boundary.
double effective_lr(double base_lr, int64_t step, const LrSchedule& schedule);

// p <- p - lr_eff * grad for every parameter. Requires populated gradients
// (StateError otherwise) and lr > 0.
void sgd_step(std::span<Parameter* const> params, double lr, int64_t step,
              const LrSchedule& schedule);

}  // namespace shiftlab
