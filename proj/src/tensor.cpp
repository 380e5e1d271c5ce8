#include "shiftlab/tensor.hpp"

#include <cmath>
#include <sstream>

#include "shiftlab/errors.hpp"
#include "shiftlab/kernels.hpp"

namespace shiftlab {

int64_t shape_numel(std::span<const int64_t> shape) {
  int64_t n = 1;
  for (const int64_t e : shape) {
    if (e < 0) throw ShapeError("negative extent in shape " + shape_str(shape));
    n *= e;
  }
  return n;
}

std::string shape_str(std::span<const int64_t> shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(std::vector<int64_t> shape)
    : shape_(std::move(shape)),
      data_(static_cast<size_t>(shape_numel(shape_)), 0.0) {}

Tensor::Tensor(std::vector<int64_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_numel(shape_) != static_cast<int64_t>(data_.size())) {
    throw ShapeError("data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_str(shape_));
  }
}

Tensor Tensor::scalar(double v) { return Tensor({}, {v}); }

Tensor Tensor::zeros_like(const Tensor& other) { return Tensor(other.shape_); }

double Tensor::item() const {
  if (numel() != 1) {
    throw ShapeError("item() on tensor of shape " + shape_str(shape_));
  }
  return data_[0];
}

void Tensor::fill(double v) {
  for (double& x : data_) x = v;
}

bool Tensor::all_finite() const {
  // A running sum propagates any NaN and any uncancelled Inf; cheap probe
  // first, exact scan only when the probe trips.
  const double s = kernels::active().sum(data_.data(), numel());
  if (std::isfinite(s)) return true;
  for (const double x : data_) {
    if (!std::isfinite(x)) return false;
  }
  return false;  // finite elements that overflow in aggregate: treat as error
}

Parameter::Parameter(std::string name_, Tensor value_)
    : name(std::move(name_)),
      value(std::move(value_)),
      grad(Tensor::zeros_like(value)) {}

void Parameter::zero_grad() {
  grad.fill(0.0);
  grad_ready = false;
}

}  // namespace shiftlab
