#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "lfi/errors.hpp"

namespace lfi::nd {

// Dense row-major tensor of doubles. Rank is small (0-4 in practice);
// scalars are stored as shape {1}.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::vector<int> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    if (static_cast<std::size_t>(extent_product(shape)) != data.size())
      throw ContractViolation("tensor: shape/data size mismatch");
  }

  static long extent_product(const std::vector<int>& s) {
    long n = 1;
    for (int e : s) {
      if (e < 0) throw ContractViolation("tensor: negative extent");
      n *= e;
    }
    return n;
  }

  static Tensor zeros(std::vector<int> s) {
    long n = extent_product(s);
    return Tensor(std::move(s), std::vector<double>(static_cast<std::size_t>(n), 0.0));
  }
  static Tensor full(std::vector<int> s, double v) {
    long n = extent_product(s);
    return Tensor(std::move(s), std::vector<double>(static_cast<std::size_t>(n), v));
  }
  static Tensor scalar(double v) { return Tensor({1}, {v}); }
  static Tensor row(std::vector<double> v) {
    int n = static_cast<int>(v.size());
    return Tensor({1, n}, std::move(v));
  }
  static Tensor vec(std::vector<double> v) {
    int n = static_cast<int>(v.size());
    return Tensor({n}, std::move(v));
  }

  int size() const { return static_cast<int>(data.size()); }
  bool is_scalar() const { return data.size() == 1; }
  int rank() const { return static_cast<int>(shape.size()); }

  int rows() const { return rank() >= 1 ? shape[0] : 1; }
  int cols() const {
    if (rank() == 2) return shape[1];
    if (rank() == 1) return shape[0];
    throw ContractViolation("tensor: cols() needs rank 1 or 2");
  }

  double& at(int i) { return data[static_cast<std::size_t>(i)]; }
  double at(int i) const { return data[static_cast<std::size_t>(i)]; }
  double& at(int i, int j) { return data[static_cast<std::size_t>(i) * shape[1] + j]; }
  double at(int i, int j) const { return data[static_cast<std::size_t>(i) * shape[1] + j]; }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  std::string shape_str() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(shape[i]);
    }
    return s + "]";
  }
};

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace lfi::nd
