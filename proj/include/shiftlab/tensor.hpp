#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace shiftlab {

// Dense row-major n-d array of 64-bit floats. Plain value type; gradients
// live on Parameter and on graph nodes.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int64_t> shape);  // zero-filled
  Tensor(std::vector<int64_t> shape, std::vector<double> data);

  static Tensor scalar(double v);
  static Tensor zeros_like(const Tensor& other);

  const std::vector<int64_t>& shape() const { return shape_; }
  int64_t rank() const { return static_cast<int64_t>(shape_.size()); }
  int64_t extent(int64_t axis) const { return shape_[axis]; }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> span() { return data_; }
  std::span<const double> span() const { return data_; }

  double item() const;  // requires numel() == 1
  void fill(double v);
  bool all_finite() const;

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

 private:
  std::vector<int64_t> shape_;
  std::vector<double> data_;
};

int64_t shape_numel(std::span<const int64_t> shape);
std::string shape_str(std::span<const int64_t> shape);

// Named trainable tensor. Gradient buffer has the same shape as the value;
// Graph::backward accumulates into it and marks it ready.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool grad_ready = false;

  Parameter() = default;
  Parameter(std::string name_, Tensor value_);
  void zero_grad();
};

}  // namespace shiftlab
