#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pieapp::numeric {

// Dense row-major array of 64-bit floats. Shapes are lists of positive
// integers; product(shape) always equals the data length.
class Array {
 public:
  Array() = default;

  explicit Array(std::vector<std::size_t> shape)
      : shape_(std::move(shape)), data_(checked_size(shape_), 0.0) {}

  Array(std::vector<std::size_t> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_size(shape_) != data_.size()) {
      throw std::invalid_argument(
          "numeric-core: Array: data length does not match shape product");
    }
  }

  static Array scalar(double v) { return Array({1}, {v}); }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double item() const {
    if (data_.size() != 1) {
      throw std::invalid_argument("numeric-core: Array: item() on non-scalar");
    }
    return data_[0];
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
  void zero() { fill(0.0); }

  bool same_shape(const Array& other) const { return shape_ == other.shape_; }

  bool all_finite() const {
    for (double v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

 private:
  static std::size_t checked_size(const std::vector<std::size_t>& shape) {
    if (shape.empty()) {
      throw std::invalid_argument("numeric-core: Array: empty shape");
    }
    std::size_t n = 1;
    for (std::size_t d : shape) {
      if (d == 0) {
        throw std::invalid_argument(
            "numeric-core: Array: shape entries must be positive");
      }
      n *= d;
    }
    return n;
  }

  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

inline std::string shape_string(const Array& a) {
  std::string s = "[";
  for (std::size_t i = 0; i < a.shape().size(); ++i) {
    if (i) s += ",";
    s += std::to_string(a.shape()[i]);
  }
  return s + "]";
}

// Named trainable value with a persistent accumulated gradient.
struct Parameter {
  std::string name;
  Array value;
  Array grad;

  Parameter(std::string n, Array v)
      : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad() { grad.zero(); }
};

}  // namespace pieapp::numeric
