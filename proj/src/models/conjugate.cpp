#include "lfi/models/conjugate.hpp"

#include <cmath>

#include "lfi/mathx.hpp"

namespace lfi {

void normal_normal_posterior(double prior_mean, double prior_var, double lik_var,
                             const std::vector<double>& observations, double* post_mean,
                             double* post_var) {
  if (prior_var <= 0 || lik_var <= 0)
    throw ContractViolation("normal_normal_posterior: variances must be positive");
  double precision = 1.0 / prior_var;
  double weighted = prior_mean / prior_var;
  for (double x : observations) {
    precision += 1.0 / lik_var;
    weighted += x / lik_var;
  }
  *post_var = 1.0 / precision;
  *post_mean = weighted / precision;
}

double NormalNormalModel::prior_logpdf(const std::vector<double>& beta) const {
  return nd::normal_logpdf(beta[0], prior_mean_, prior_std_);
}

nd::Tape::Id NormalNormalModel::prior_logpdf_tape(nd::Tape& t, nd::Tape::Id beta) const {
  double c = -0.5 * nd::kLog2Pi - std::log(prior_std_);
  auto z = t.scale(t.add_const(beta, -prior_mean_), 1.0 / prior_std_);
  return t.add_const(t.scale(t.sum(t.square(z)), -0.5), c);
}

std::vector<double> NormalNormalModel::prior_sample(nd::RngStream& rng) const {
  return {prior_mean_ + prior_std_ * rng.normal()};
}

std::vector<double> NormalNormalModel::simulate_local(const std::vector<double>& eps,
                                                      const std::vector<double>& z,
                                                      const std::vector<double>& beta,
                                                      const std::vector<double>* covariate) const {
  (void)z;
  (void)covariate;
  return {beta[0] + lik_std_ * eps[0]};
}

double NormalNormalModel::loglik_row(const std::vector<double>& beta,
                                     const std::vector<double>& x_row,
                                     const std::vector<double>* covariate) const {
  (void)covariate;
  return nd::normal_logpdf(x_row[0], beta[0], lik_std_);
}

nd::Tape::Id NormalNormalModel::loglik_row_tape(nd::Tape& t, nd::Tape::Id beta,
                                                const std::vector<double>& x_row,
                                                const std::vector<double>* covariate) const {
  (void)covariate;
  double c = -0.5 * nd::kLog2Pi - std::log(lik_std_);
  auto diff = t.scale(t.add_const(beta, -x_row[0]), 1.0 / lik_std_);
  return t.add_const(t.scale(t.sum(t.square(diff)), -0.5), c);
}

GaussianPosterior NormalNormalModel::exact_posterior(const Dataset& data) const {
  std::vector<double> obs;
  obs.reserve(static_cast<std::size_t>(data.n()));
  for (int i = 0; i < data.n(); ++i) obs.push_back(data.rows.at(i, 0));
  double m, v;
  normal_normal_posterior(prior_mean_, prior_std_ * prior_std_, lik_std_ * lik_std_, obs, &m, &v);
  return {{m}, {std::sqrt(v)}};
}

double LinregModel::prior_logpdf(const std::vector<double>& beta) const {
  double s = 0.0;
  for (double b : beta) s += nd::normal_logpdf(b, 0.0, prior_std_);
  return s;
}

nd::Tape::Id LinregModel::prior_logpdf_tape(nd::Tape& t, nd::Tape::Id beta) const {
  double c = output_dim_ * (-0.5 * nd::kLog2Pi - std::log(prior_std_));
  auto z = t.scale(beta, 1.0 / prior_std_);
  return t.add_const(t.scale(t.sum(t.square(z)), -0.5), c);
}

std::vector<double> LinregModel::prior_sample(nd::RngStream& rng) const {
  std::vector<double> out(static_cast<std::size_t>(output_dim_));
  for (auto& v : out) v = prior_std_ * rng.normal();
  return out;
}

std::vector<double> LinregModel::simulate_local(const std::vector<double>& eps,
                                                const std::vector<double>& z,
                                                const std::vector<double>& beta,
                                                const std::vector<double>* covariate) const {
  (void)z;
  if (!covariate) throw ContractViolation("linreg: covariate required");
  double x = (*covariate)[0];
  std::vector<double> y(static_cast<std::size_t>(output_dim_));
  for (int k = 0; k < output_dim_; ++k)
    y[static_cast<std::size_t>(k)] = beta[static_cast<std::size_t>(k)] * x +
                                     noise_std_ * eps[static_cast<std::size_t>(k)];
  return y;
}

double LinregModel::loglik_row(const std::vector<double>& beta, const std::vector<double>& x_row,
                               const std::vector<double>* covariate) const {
  if (!covariate) throw ContractViolation("linreg: covariate required");
  double x = (*covariate)[0];
  double s = 0.0;
  for (int k = 0; k < output_dim_; ++k)
    s += nd::normal_logpdf(x_row[static_cast<std::size_t>(k)],
                           beta[static_cast<std::size_t>(k)] * x, noise_std_);
  return s;
}

nd::Tape::Id LinregModel::loglik_row_tape(nd::Tape& t, nd::Tape::Id beta,
                                          const std::vector<double>& x_row,
                                          const std::vector<double>* covariate) const {
  if (!covariate) throw ContractViolation("linreg: covariate required");
  double x = (*covariate)[0];
  double c = output_dim_ * (-0.5 * nd::kLog2Pi - std::log(noise_std_));
  // residual_k = (y_k - beta_k * x) / noise_std
  // copy: growing the tape below invalidates references into it
  const std::vector<int> bshape = t.value(beta).shape;
  auto pred = t.scale(beta, x);
  auto resid = t.scale(t.sub(t.constant(nd::Tensor(bshape, x_row)), pred), 1.0 / noise_std_);
  return t.add_const(t.scale(t.sum(t.square(resid)), -0.5), c);
}

GaussianPosterior LinregModel::exact_posterior(const Dataset& data) const {
  if (!data.has_covariates()) throw ContractViolation("linreg: covariates required");
  // Per output k: precision = 1/prior_var + sum x^2 / noise_var,
  // mean = (sum x y_k / noise_var) / precision.
  double sxx = 0.0;
  for (int i = 0; i < data.n(); ++i) {
    double x = data.covariates.at(i, 0);
    sxx += x * x;
  }
  double noise_var = noise_std_ * noise_std_;
  double precision = 1.0 / (prior_std_ * prior_std_) + sxx / noise_var;
  GaussianPosterior post;
  for (int k = 0; k < output_dim_; ++k) {
    double sxy = 0.0;
    for (int i = 0; i < data.n(); ++i) sxy += data.covariates.at(i, 0) * data.rows.at(i, k);
    post.mean.push_back(sxy / noise_var / precision);
    post.std.push_back(std::sqrt(1.0 / precision));
  }
  return post;
}

Dataset LinregModel::make_dataset(const std::vector<double>& beta, int n,
                                  nd::RngStream& rng) const {
  nd::Tensor cov = nd::Tensor::zeros({n, 1});
  for (int i = 0; i < n; ++i) cov.at(i, 0) = rng.uniform(-3.0, 3.0);
  nd::RngStream sim = rng.substream(0xdeca);
  return simulate_dataset(*this, beta, n, sim, &cov);
}

}  // namespace lfi
