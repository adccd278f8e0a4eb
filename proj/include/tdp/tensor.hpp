#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "tdp/error.hpp"

namespace tdp {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

inline std::string shape_to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

// Dense array of 64-bit floats in row-major order.
struct Tensor {
  Shape shape;
  std::vector<double> data;

  Tensor() = default;

  explicit Tensor(Shape s, double fill = 0.0)
      : shape(std::move(s)), data(shape_size(shape), fill) {}

  Tensor(Shape s, std::vector<double> values)
      : shape(std::move(s)), data(std::move(values)) {
    if (data.size() != shape_size(shape)) {
      fail("tensor data has " + std::to_string(data.size()) +
           " values, shape " + shape_to_string(shape) + " wants " +
           std::to_string(shape_size(shape)));
    }
  }

  static Tensor vector(std::vector<double> values) {
    Shape s{values.size()};
    return Tensor(std::move(s), std::move(values));
  }

  static Tensor scalar(double value) { return Tensor({1}, {value}); }

  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape); }

  std::size_t size() const { return data.size(); }

  bool is_vector() const { return shape.size() == 1; }
  bool is_matrix() const { return shape.size() == 2; }
  bool is_scalar() const { return size() == 1; }

  std::size_t rows() const { return shape.at(0); }
  std::size_t cols() const { return shape.at(1); }

  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  double& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }

  void fill(double value) { data.assign(data.size(), value); }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

inline void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    fail(std::string(op) + ": shape mismatch between " +
         shape_to_string(a.shape) + " and " + shape_to_string(b.shape));
  }
}

}  // namespace tdp
