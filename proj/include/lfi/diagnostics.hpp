#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lfi/lfvi.hpp"

namespace lfi {

// One snapshot of how far the trained ratio is from the exact log likelihood:
// diffs[k] = sum_n [log p(x_n | beta_k) - r(x_n, beta_k)] for beta_k ~ q.
// When r is exact the diff is constant in beta, so its variance tends to 0.
struct StabilityCheckpoint {
  int iteration = 0;
  std::vector<double> diffs;
  double mean = 0.0;
  double variance = 0.0;
};

struct StabilityTrace {
  std::vector<StabilityCheckpoint> checkpoints;
};

enum class StabilityRegime {
  kJoint,         // q and r train together
  kFrozenRandom,  // r trains against q frozen wherever the caller left it
  kFrozenExact,   // r trains against q frozen at the exact posterior
};

struct StabilityConfig {
  StabilityRegime regime = StabilityRegime::kJoint;
  int checkpoint_every = 100;
  int n_beta_draws = 32;
  // Multiplies the estimator's initial first-layer weights on the beta
  // inputs. A deliberately loud random start gives the traces a visible
  // initial transient; the balanced optimum has only weak beta-coupling,
  // so training erases what this injects.
  double beta_input_gain = 1.0;
  LfviConfig lfvi;  // iteration count, optimizers, loss, seed
};

// Runs the alternating loop (frozen regimes zero the lambda learning rate)
// and records a checkpoint before training and every checkpoint_every
// iterations. Needs a model with a tractable likelihood.
StabilityTrace ratio_stability(const HimModel& model, const Dataset& data, GlobalApprox& q,
                               RatioEstimator& est, const StabilityConfig& cfg);

// The same difference statistics for an arbitrary ratio, one checkpoint.
StabilityCheckpoint stability_probe(const HimModel& model, const Dataset& data,
                                    const std::function<double(const std::vector<double>& x_row,
                                                               const std::vector<double>* cov,
                                                               const std::vector<double>& beta)>& r,
                                    const GlobalApprox& q, int n_beta_draws, nd::RngStream& rng);

// CSV with header iteration,variance,mean_diff.
std::string stability_csv(const StabilityTrace& trace);

// Differentiable simulator with (z, beta) fixed: maps a [1, E] noise node to
// a [1, D] output node on the same tape.
using DiffSimulator = std::function<nd::Tape::Id(nd::Tape&, nd::Tape::Id)>;

struct NoiseInvertConfig {
  int max_iters = 1000;
  double tol = 1e-8;
  double rho0 = 1.0;
  // Halve the step until the residual decreases (at most 60 halvings per
  // iteration). Off means a constant step rho0.
  bool backtracking = true;
  std::vector<double> start;  // empty = zeros
};

struct NoiseInvertResult {
  std::vector<double> eps;
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> residual_trace;  // residual after each iteration
};

// Nonlinear least squares for the noise posterior of a deterministic
// simulator: minimize ||g(eps) - x_target|| by gradient steps
// eps <- eps - rho * J^T (g(eps) - x_target). Converged when the residual
// norm is within tol; a zero-gradient stall exits unconverged.
NoiseInvertResult noise_invert(const DiffSimulator& g, int eps_dim,
                               const std::vector<double>& x_target,
                               const NoiseInvertConfig& cfg);

struct PosteriorMetrics {
  double nlp_true = 0.0;
  std::vector<bool> ci95_contains;
  bool all_contained() const {
    for (bool b : ci95_contains)
      if (!b) return false;
    return true;
  }
};

// Closed-form metrics for a meanfield normal posterior.
PosteriorMetrics posterior_metrics(const std::vector<double>& mean,
                                   const std::vector<double>& std,
                                   const std::vector<double>& true_beta);

// Sample-based metrics: per-dimension Gaussian KDE with Silverman bandwidth
// for the density, 2.5%/97.5% sample quantiles for the interval. Needs at
// least 100 samples.
PosteriorMetrics posterior_metrics(const std::vector<std::vector<double>>& samples,
                                   const std::vector<double>& true_beta);

// log of a Silverman-bandwidth Gaussian KDE density at a point, one
// dimension.
double kde_logpdf(const std::vector<double>& xs, double at);

}  // namespace lfi
