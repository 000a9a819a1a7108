#pragma once

#include <cmath>
#include <vector>

#include "lfi/tape.hpp"
#include "lfi/tensor.hpp"

namespace lfi::nd {

// Per-dimension running mean/scale for standardizing estimator inputs.
// First batch seeds the stats directly; later batches blend in with the
// given momentum. apply_tape writes the affine with tape constants, so
// gradients still flow through the standardized inputs.
class RunningStandardizer {
 public:
  RunningStandardizer(int dim, double momentum = 0.99)
      : mean_(static_cast<std::size_t>(dim), 0.0),
        var_(static_cast<std::size_t>(dim), 1.0),
        momentum_(momentum) {}

  int dim() const { return static_cast<int>(mean_.size()); }
  bool seeded() const { return seeded_; }
  const std::vector<double>& mean() const { return mean_; }

  void update(const Tensor& rows) {
    int B = rows.shape[0], D = rows.shape[1];
    if (D != dim()) throw ContractViolation("standardizer: dim mismatch");
    for (int j = 0; j < D; ++j) {
      double m = 0.0;
      for (int i = 0; i < B; ++i) m += rows.at(i, j);
      m /= B;
      double v = 0.0;
      for (int i = 0; i < B; ++i) {
        double d = rows.at(i, j) - m;
        v += d * d;
      }
      v /= B;
      if (!seeded_) {
        mean_[static_cast<std::size_t>(j)] = m;
        var_[static_cast<std::size_t>(j)] = v;
      } else {
        mean_[static_cast<std::size_t>(j)] = momentum_ * mean_[static_cast<std::size_t>(j)] + (1.0 - momentum_) * m;
        var_[static_cast<std::size_t>(j)] = momentum_ * var_[static_cast<std::size_t>(j)] + (1.0 - momentum_) * v;
      }
    }
    seeded_ = true;
  }

  double scale(int j) const { return std::sqrt(var_[static_cast<std::size_t>(j)] + 1e-8); }

  Tensor apply_plain(const Tensor& rows) const {
    Tensor out = rows;
    int B = rows.shape[0], D = rows.shape[1];
    for (int j = 0; j < D; ++j) {
      double m = mean_[static_cast<std::size_t>(j)];
      double inv = 1.0 / scale(j);
      for (int i = 0; i < B; ++i) out.at(i, j) = (out.at(i, j) - m) * inv;
    }
    return out;
  }

  // (rows - mean) * inv_scale with mean/inv_scale as constants.
  Tape::Id apply_tape(Tape& t, Tape::Id rows) const {
    const Tensor& v = t.value(rows);
    int B = v.shape[0], D = v.shape[1];
    if (D != dim()) throw ContractViolation("standardizer: dim mismatch");
    std::vector<double> negm(static_cast<std::size_t>(D));
    std::vector<double> inv(static_cast<std::size_t>(D));
    for (int j = 0; j < D; ++j) {
      negm[static_cast<std::size_t>(j)] = -mean_[static_cast<std::size_t>(j)];
      inv[static_cast<std::size_t>(j)] = 1.0 / scale(j);
    }
    Tape::Id shifted = t.add(rows, t.broadcast(t.constant(Tensor::row(std::move(negm))), {B, D}));
    return t.mul(shifted, t.broadcast(t.constant(Tensor::row(std::move(inv))), {B, D}));
  }

 private:
  std::vector<double> mean_;
  std::vector<double> var_;
  double momentum_;
  bool seeded_ = false;
};

}  // namespace lfi::nd
