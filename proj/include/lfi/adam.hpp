#pragma once

#include <cmath>
#include <vector>

#include "lfi/tensor.hpp"

namespace lfi::nd {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // 0 disables clipping. Applied to the global norm across all tensors in
  // one step() call.
  double clip_norm = 0.0;
  // Per-step multiplicative decay of the learning rate: step t uses
  // lr * lr_decay^(t-1). 1 keeps the rate constant.
  double lr_decay = 1.0;
  // Decoupled L2 shrinkage applied after the adaptive update, scaled by the
  // step's effective learning rate. 0 disables it.
  double weight_decay = 0.0;
};

// Adam with bias correction over a fixed list of parameter tensors.
// A step whose gradients contain any non-finite value is rejected: the
// parameters and moments stay untouched and the step reports failure.
class AdamState {
 public:
  explicit AdamState(AdamConfig cfg = {}) : cfg_(cfg) {}

  const AdamConfig& config() const { return cfg_; }
  long steps_taken() const { return t_; }
  long steps_rejected() const { return rejected_; }

  // params and grads must be positionally aligned across calls.
  bool step(std::vector<Tensor*> params, const std::vector<Tensor>& grads) {
    if (params.size() != grads.size()) throw ContractViolation("adam: params/grads size mismatch");
    if (m_.empty()) {
      for (const Tensor* p : params) {
        m_.push_back(Tensor::zeros(p->shape));
        v_.push_back(Tensor::zeros(p->shape));
      }
    }
    if (m_.size() != params.size()) throw ContractViolation("adam: parameter count changed");

    double sq = 0.0;
    bool finite = true;
    for (const Tensor& g : grads) {
      for (double x : g.data) {
        if (!std::isfinite(x)) {
          finite = false;
          break;
        }
        sq += x * x;
      }
      if (!finite) break;
    }
    if (!finite) {
      ++rejected_;
      return false;
    }

    double scale = 1.0;
    double norm = std::sqrt(sq);
    if (cfg_.clip_norm > 0.0 && norm > cfg_.clip_norm) scale = cfg_.clip_norm / norm;

    ++t_;
    double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    double lr_t = cfg_.lr_decay == 1.0
                      ? cfg_.lr
                      : cfg_.lr * std::pow(cfg_.lr_decay, static_cast<double>(t_ - 1));
    for (std::size_t k = 0; k < params.size(); ++k) {
      Tensor& p = *params[k];
      const Tensor& g = grads[k];
      if (!p.same_shape(g)) throw ContractViolation("adam: grad shape mismatch");
      Tensor& m = m_[k];
      Tensor& v = v_[k];
      for (std::size_t i = 0; i < p.data.size(); ++i) {
        double gi = g.data[i] * scale;
        m.data[i] = cfg_.beta1 * m.data[i] + (1.0 - cfg_.beta1) * gi;
        v.data[i] = cfg_.beta2 * v.data[i] + (1.0 - cfg_.beta2) * gi * gi;
        double mhat = m.data[i] / bc1;
        double vhat = v.data[i] / bc2;
        p.data[i] -= lr_t * mhat / (std::sqrt(vhat) + cfg_.eps);
        if (cfg_.weight_decay != 0.0) p.data[i] -= lr_t * cfg_.weight_decay * p.data[i];
      }
    }
    return true;
  }

 private:
  AdamConfig cfg_;
  long t_ = 0;
  long rejected_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

}  // namespace lfi::nd
