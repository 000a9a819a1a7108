#pragma once

#include <vector>

#include "lfi/him.hpp"

namespace lfi {

struct GaussianPosterior {
  std::vector<double> mean;
  std::vector<double> std;
};

// Exact conjugate update for x_i ~ N(beta, lik_var), beta ~ N(prior_mean,
// prior_var). Zero observations return the prior.
void normal_normal_posterior(double prior_mean, double prior_var, double lik_var,
                             const std::vector<double>& observations, double* post_mean,
                             double* post_var);

// Scalar-location model with a tractable likelihood, used as the oracle for
// the likelihood-free machinery: x = beta + lik_std * eps.
class NormalNormalModel : public HimModel {
 public:
  NormalNormalModel(double prior_mean = 0.0, double prior_std = 1.0, double lik_std = 1.0)
      : prior_mean_(prior_mean), prior_std_(prior_std), lik_std_(lik_std) {}

  int global_dim() const override { return 1; }
  int noise_dim() const override { return 1; }
  int data_dim() const override { return 1; }

  double prior_logpdf(const std::vector<double>& beta) const override;
  nd::Tape::Id prior_logpdf_tape(nd::Tape& t, nd::Tape::Id beta) const override;
  std::vector<double> prior_sample(nd::RngStream& rng) const override;

  std::vector<double> simulate_local(const std::vector<double>& eps, const std::vector<double>& z,
                                     const std::vector<double>& beta,
                                     const std::vector<double>* covariate) const override;

  bool has_loglik() const override { return true; }
  double loglik_row(const std::vector<double>& beta, const std::vector<double>& x_row,
                    const std::vector<double>* covariate) const override;
  nd::Tape::Id loglik_row_tape(nd::Tape& t, nd::Tape::Id beta, const std::vector<double>& x_row,
                               const std::vector<double>* covariate) const override;

  GaussianPosterior exact_posterior(const Dataset& data) const;

  double prior_mean() const { return prior_mean_; }
  double prior_std() const { return prior_std_; }
  double lik_std() const { return lik_std_; }

 private:
  double prior_mean_, prior_std_, lik_std_;
};

// Linear regression with K independent outputs sharing scalar covariates:
// y_k = w_k * x + noise, w_k ~ N(0, 1), noise ~ N(0, noise_std^2). With a
// single feature the posterior over (w_1..w_K) factorizes exactly, so a
// mean-field Gaussian can represent it with zero KL gap.
class LinregModel : public HimModel {
 public:
  LinregModel(int output_dim = 2, double noise_std = 1.0, double prior_std = 1.0)
      : output_dim_(output_dim), noise_std_(noise_std), prior_std_(prior_std) {}

  int global_dim() const override { return output_dim_; }
  int noise_dim() const override { return output_dim_; }
  int data_dim() const override { return output_dim_; }
  int covariate_dim() const override { return 1; }

  double prior_logpdf(const std::vector<double>& beta) const override;
  nd::Tape::Id prior_logpdf_tape(nd::Tape& t, nd::Tape::Id beta) const override;
  std::vector<double> prior_sample(nd::RngStream& rng) const override;

  std::vector<double> simulate_local(const std::vector<double>& eps, const std::vector<double>& z,
                                     const std::vector<double>& beta,
                                     const std::vector<double>* covariate) const override;

  bool has_loglik() const override { return true; }
  double loglik_row(const std::vector<double>& beta, const std::vector<double>& x_row,
                    const std::vector<double>* covariate) const override;
  nd::Tape::Id loglik_row_tape(nd::Tape& t, nd::Tape::Id beta, const std::vector<double>& x_row,
                               const std::vector<double>* covariate) const override;

  GaussianPosterior exact_posterior(const Dataset& data) const;

  // n points with covariates uniform on [-3, 3] and data simulated at beta.
  Dataset make_dataset(const std::vector<double>& beta, int n, nd::RngStream& rng) const;

  double noise_std() const { return noise_std_; }

 private:
  int output_dim_;
  double noise_std_;
  double prior_std_;
};

}  // namespace lfi
