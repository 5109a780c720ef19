#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace pfvae {

// Shapes are row-major dimension lists. An empty shape is a scalar.
using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

// Dense row-major f64 tensor. All math in this project runs in double
// precision; there is deliberately no dtype parameter.
class Tensor {
 public:
  // Default-constructed tensor is the scalar 0.
  Tensor() : data_(1, 0.0) {}
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double v);
  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, double v);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t dim(std::size_t axis) const;

  bool is_scalar() const { return data_.size() == 1; }
  double item() const;

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // Rank-2 accessors.
  double& at(std::size_t r, std::size_t c);
  double at(std::size_t r, std::size_t c) const;

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  const std::vector<double>& values() const { return data_; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;
  std::string shape_str() const { return pfvae::shape_str(shape_); }

  void fill(double v);

 private:
  Shape shape_;               // empty means scalar
  std::vector<double> data_;  // size == product(shape_)
};

}  // namespace pfvae
