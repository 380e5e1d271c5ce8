#include "shiftlab/optimizer.hpp"

#include "shiftlab/errors.hpp"
#include "shiftlab/kernels.hpp"

namespace shiftlab {

double effective_lr(double base_lr, int64_t step, const LrSchedule& schedule) {
  return step > schedule.decay_at ? base_lr * schedule.factor : base_lr;
}

void sgd_step(std::span<Parameter* const> params, double lr, int64_t step,
              const LrSchedule& schedule) {
  if (lr <= 0.0) throw ArgumentError("sgd_step: lr must be positive");
  const double lr_eff = effective_lr(lr, step, schedule);
  for (Parameter* p : params) {
    if (!p->grad_ready) {
      throw StateError("sgd_step: no gradient for parameter '" + p->name +
                       "'; run backward first");
    }
  }
  for (Parameter* p : params) {
    kernels::active().axpy(-lr_eff, p->grad.data(), p->value.data(),
                           p->value.numel());
  }
}

}  // namespace shiftlab
