#include "noisyarm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace noisyarm {

namespace {

std::size_t checked_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeError("tensor: zero dimension in shape " + shape_to_string(shape));
    n *= d;
  }
  return n;
}

}  // namespace

std::string shape_to_string(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << ")";
  return os.str();
}

Tensor::Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
  values_.assign(checked_product(shape_), 0.0);
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values, const char* context)
    : shape_(std::move(shape)), values_(std::move(values)) {
  const std::size_t n = checked_product(shape_);
  if (n != values_.size()) {
    throw ShapeError(std::string(context) + ": shape " + shape_to_string(shape_) + " expects " +
                     std::to_string(n) + " values, got " + std::to_string(values_.size()));
  }
  check_finite(context);
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}, "scalar"); }

void Tensor::check_finite(const char* context) const {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw NonFiniteError(std::string(context) + ": non-finite value at index " +
                           std::to_string(i));
    }
  }
}

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

std::string Tensor::shape_str() const { return shape_to_string(shape_); }

}  // namespace noisyarm
