#pragma once

#include <vector>

#include "lfi/rng.hpp"
#include "lfi/tape.hpp"
#include "lfi/tensor.hpp"

namespace lfi {

// Observed data: one row per data point, plus optional per-point covariates
// (conditional models condition on them, never simulate them).
struct Dataset {
  nd::Tensor rows;        // [N, data_dim]
  nd::Tensor covariates;  // [N, cov_dim] or empty

  int n() const { return rows.rank() == 2 ? rows.shape[0] : 0; }
  bool has_covariates() const { return covariates.size() > 0; }

  std::vector<double> row(int i) const {
    std::vector<double> out(static_cast<std::size_t>(rows.shape[1]));
    for (int j = 0; j < rows.shape[1]; ++j) out[static_cast<std::size_t>(j)] = rows.at(i, j);
    return out;
  }
  std::vector<double> covariate(int i) const {
    std::vector<double> out(static_cast<std::size_t>(covariates.shape[1]));
    for (int j = 0; j < covariates.shape[1]; ++j)
      out[static_cast<std::size_t>(j)] = covariates.at(i, j);
    return out;
  }
};

// Hierarchical implicit model: data point x_n is a deterministic function of
// noise eps_n, an optional local latent z_n, globals beta, and an optional
// covariate. The density of x_n is never required; only the sampler is.
// Tractable models additionally expose their exact per-row log likelihood so
// oracles and diagnostics can compare against the trained ratio.
class HimModel {
 public:
  virtual ~HimModel() = default;

  virtual int global_dim() const = 0;
  virtual int local_dim() const { return 0; }
  virtual int noise_dim() const = 0;
  virtual int data_dim() const = 0;
  virtual int covariate_dim() const { return 0; }

  virtual double prior_logpdf(const std::vector<double>& beta) const = 0;
  // Same density with beta as a [1, G] node, so gradients flow to beta.
  virtual nd::Tape::Id prior_logpdf_tape(nd::Tape& t, nd::Tape::Id beta) const = 0;
  virtual std::vector<double> prior_sample(nd::RngStream& rng) const = 0;
  // Flat (improper) priors contribute exactly zero to variational objectives.
  virtual bool flat_prior() const { return false; }

  virtual std::vector<double> local_prior_sample(const std::vector<double>& beta,
                                                 nd::RngStream& rng) const {
    (void)beta;
    (void)rng;
    if (local_dim() != 0) throw ContractViolation("model: local_prior_sample not implemented");
    return {};
  }

  // Deterministic given all inputs. eps has length noise_dim(), z has length
  // local_dim(), covariate is null for unconditional models.
  virtual std::vector<double> simulate_local(const std::vector<double>& eps,
                                             const std::vector<double>& z,
                                             const std::vector<double>& beta,
                                             const std::vector<double>* covariate) const = 0;

  // Draws eps (and z from the local prior when present) and simulates.
  std::vector<double> simulate(const std::vector<double>& beta,
                               const std::vector<double>* covariate, nd::RngStream& rng,
                               std::vector<double>* z_out = nullptr) const {
    std::vector<double> eps = rng.normal_vec(noise_dim());
    std::vector<double> z;
    if (local_dim() > 0) z = local_prior_sample(beta, rng);
    if (z_out) *z_out = z;
    return simulate_local(eps, z, beta, covariate);
  }

  virtual bool has_loglik() const { return false; }
  virtual double loglik_row(const std::vector<double>& beta, const std::vector<double>& x_row,
                            const std::vector<double>* covariate) const {
    (void)beta;
    (void)x_row;
    (void)covariate;
    throw ContractViolation("model: log likelihood not available");
  }
  // log p(x_row | beta) with beta a [1, G] node and x_row constant.
  virtual nd::Tape::Id loglik_row_tape(nd::Tape& t, nd::Tape::Id beta,
                                       const std::vector<double>& x_row,
                                       const std::vector<double>* covariate) const {
    (void)t;
    (void)beta;
    (void)x_row;
    (void)covariate;
    throw ContractViolation("model: log likelihood not available");
  }
};

// N independent simulations at fixed beta. Per-row substreams keep the result
// independent of evaluation order, so rows can be produced in parallel.
Dataset simulate_dataset(const HimModel& model, const std::vector<double>& beta, int n,
                         nd::RngStream& rng, const nd::Tensor* covariates = nullptr);

}  // namespace lfi
