#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace lfi::nd {

inline constexpr double kLog2Pi = 1.8378770664093454836;

// softplus(x) = log(1 + e^x), computed without overflow for |x| up to ~700.
inline double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

// log sigma(x) = -softplus(-x)
inline double log_sigmoid(double x) { return -softplus(-x); }

inline double sigmoid(double x) { return std::exp(-softplus(-x)); }

inline double softplus_grad(double x) { return sigmoid(x); }

inline double normal_logpdf(double x, double mean, double std) {
  double z = (x - mean) / std;
  return -0.5 * kLog2Pi - std::log(std) - 0.5 * z * z;
}

// Lognormal with location/scale of the underlying normal.
// Returns -inf for x <= 0.
inline double lognormal_logpdf(double x, double loc, double scale) {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  double lx = std::log(x);
  return normal_logpdf(lx, loc, scale) - lx;
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Population variance.
inline double var_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

inline double stddev_of(const std::vector<double>& v) { return std::sqrt(var_of(v)); }

// Median (copies; fine for diagnostic-sized inputs).
inline double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  std::nth_element(v.begin(), v.begin() + mid - 1, v.end());
  return 0.5 * (hi + v[mid - 1]);
}

// Empirical quantile with linear interpolation between order statistics.
double quantile_of(std::vector<double> v, double q);

// Standard normal quantile (Acklam's rational approximation, |err| < 1e-9).
double normal_quantile(double p);

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / 1.4142135623730950488); }

}  // namespace lfi::nd
