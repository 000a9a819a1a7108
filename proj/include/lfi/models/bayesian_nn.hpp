#pragma once

#include <vector>

#include "lfi/mlp.hpp"
#include "lfi/rng.hpp"
#include "lfi/tensor.hpp"

namespace lfi {

// Tractable classifier baseline: the same MLP shape as the implicit
// classifier but with a Bernoulli likelihood on the logit,
// log p(y | x, w) = -softplus(-y * logit), labels in {-1, +1}.
// Fits by MAP or by mean-field Gaussian VI over every weight, with the
// closed-form KL to the standard normal prior.
class BayesianNn {
 public:
  BayesianNn(int feature_dim, int hidden_dim = 25);

  struct FitInfo {
    std::vector<double> objective_trace;  // per-iteration training objective
    bool diverged = false;
  };

  FitInfo fit_map(const nd::Tensor& X, const std::vector<double>& y, int iterations,
                  int batch_size, double lr, nd::RngStream& rng);
  FitInfo fit_vi(const nd::Tensor& X, const std::vector<double>& y, int iterations,
                 int batch_size, double lr, nd::RngStream& rng);

  // P(y = +1 | x). MAP uses the fitted point; VI averages the link over
  // posterior weight draws.
  double predict_prob_map(const std::vector<double>& features) const;
  double predict_prob_vi(const std::vector<double>& features, int n_samples,
                         nd::RngStream& rng) const;

  bool vi_fitted() const { return !vi_mu_.empty(); }

 private:
  int feature_dim_;
  nd::Mlp net_;
  std::vector<nd::Tensor> vi_mu_;
  std::vector<nd::Tensor> vi_logsigma_;
};

}  // namespace lfi
