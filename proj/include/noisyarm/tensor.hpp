#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace noisyarm {

// Raised when a tensor would contain NaN/Inf. The training loop maps this to
// a divergence error; everything else treats it as a hard fault.
class NonFiniteError : public std::runtime_error {
 public:
  explicit NonFiniteError(const std::string& what) : std::runtime_error(what) {}
};

class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

// Dense row-major tensor of doubles. Values are validated finite whenever a
// tensor is built from data; zero-initialized tensors are trivially finite.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::vector<std::size_t> shape, std::vector<double> values,
         const char* context = "tensor");

  static Tensor scalar(double v);
  static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape_); }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return values_.size(); }
  std::size_t dim(std::size_t i) const { return shape_[i]; }
  bool empty() const { return values_.empty(); }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  // 2-D accessors (row-major).
  double& at(std::size_t r, std::size_t c) { return values_[r * shape_[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return values_[r * shape_[1] + c]; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  std::string shape_str() const;

  // Re-checks the finiteness invariant after in-place mutation.
  void check_finite(const char* context) const;

  void fill(double v);

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> values_;
};

std::string shape_to_string(const std::vector<std::size_t>& shape);

}  // namespace noisyarm
