#pragma once

#include <vector>

#include "lfi/him.hpp"
#include "lfi/mlp.hpp"

namespace lfi {

// Implicit classifier: the label is the sign of an MLP applied to the
// features with a scalar noise draw concatenated in. The network weights are
// the global latent variables, with a standard normal prior. Per-row layer
// normalization stands in for batch normalization, which would couple rows.
class GanClassifierModel : public HimModel {
 public:
  GanClassifierModel(int feature_dim, int hidden_dim = 25);

  int global_dim() const override { return net_.flat_dim(); }
  int noise_dim() const override { return 1; }
  int data_dim() const override { return 1; }  // the label
  int covariate_dim() const override { return feature_dim_; }

  double prior_logpdf(const std::vector<double>& beta) const override;
  nd::Tape::Id prior_logpdf_tape(nd::Tape& t, nd::Tape::Id beta) const override;
  std::vector<double> prior_sample(nd::RngStream& rng) const override;

  std::vector<double> simulate_local(const std::vector<double>& eps, const std::vector<double>& z,
                                     const std::vector<double>& beta,
                                     const std::vector<double>* covariate) const override;

  double logit(const std::vector<double>& theta, const std::vector<double>& features,
               double eps) const;

  const nd::Mlp& net() const { return net_; }

 private:
  int feature_dim_;
  nd::Mlp net_;
};

// sign of the network output; sign(0) is +1.
double gan_classify_forward(const GanClassifierModel& model, const std::vector<double>& theta,
                            const std::vector<double>& features, double eps);

struct LabelVote {
  double label;          // +1 or -1; ties go to +1
  double plus_fraction;  // fraction of +1 votes
};

// Majority vote over n_draws noise draws for each weight sample.
LabelVote predictive_label(const GanClassifierModel& model,
                           const std::vector<std::vector<double>>& theta_samples,
                           const std::vector<double>& features, int n_draws, nd::RngStream& rng);

}  // namespace lfi
