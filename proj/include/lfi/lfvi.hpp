#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <vector>

#include "lfi/adam.hpp"
#include "lfi/him.hpp"
#include "lfi/ratio.hpp"
#include "lfi/variational.hpp"

namespace lfi {

// Unbiased subsampling estimator (N/M) * sum(values), M = values.size().
double minibatch_estimate(const std::vector<double>& values, long N);
nd::Tape::Id minibatch_estimate_on(nd::Tape& t, nd::Tape::Id values, long N, int M);

// Exact-likelihood stand-in for a trained ratio estimator, for tests and
// diagnostics on tractable models: r(x_n, beta) = log p(x_n | beta) + c.
// The per-row constant c models the (unknowable) -log q(x_n) term, which
// shifts the surrogate without moving its argmax.
class OracleRatio : public RatioFn {
 public:
  explicit OracleRatio(const HimModel& model, double log_q_row_const = 0.0)
      : model_(&model), row_const_(log_q_row_const) {}

  nd::Tape::Id eval(nd::Tape& t, const nd::Tensor& fixed_pre,
                    std::optional<nd::Tape::Id> z_block, nd::Tape::Id beta_row) const override;

 private:
  const HimModel* model_;
  double row_const_;
};

struct LfviConfig {
  int n_iterations = 1000;
  int batch_size = 64;  // M
  int mc_samples = 1;
  int ratio_steps_per_q_step = 1;
  RatioLoss loss = RatioLoss::kLog;
  // Gradient clipping at norm 10 is always on: early iterations ride an
  // untrained ratio estimator and produce wild gradients.
  nd::AdamConfig theta_opt{1e-3, 0.9, 0.999, 1e-8, 10.0};
  nd::AdamConfig lambda_opt{1e-2, 0.9, 0.999, 1e-8, 10.0};
  nd::AdamConfig phi_opt{1e-3, 0.9, 0.999, 1e-8, 10.0};
  std::uint64_t seed = 0;
  // Called after each completed iteration (0-based). The caller already owns
  // q and the estimator, so the hook only needs the clock; diagnostics use it
  // to checkpoint without forking the training loop.
  std::function<void(int)> iteration_hook;

  void validate(long n_data) const;
};

// The surrogate objective of one reparameterized draw (averaged over
// mc_samples): entropy term + (N/M) * sum over the batch of r values.
// Everything that should receive gradients lives on the returned tape.
struct SurrogateGraph {
  nd::Tape tape;
  std::vector<nd::Tape::Id> lambda_ids;
  std::vector<nd::Tape::Id> phi_ids;
  GlobalSample sample;  // the last mc draw
  nd::Tape::Id elbo = nd::Tape::kNone;
  double value = 0.0;
};

SurrogateGraph surrogate_elbo(const HimModel& model, const GlobalApprox& q_global,
                              const LocalApprox* q_local, const RatioFn& ratio,
                              const Dataset& data, const std::vector<int>& batch_idx, long N,
                              int mc_samples, bool trainable, nd::RngStream& rng);

struct FitResult {
  std::vector<double> ratio_loss_trace;  // per iteration, last ratio step
  std::vector<double> elbo_trace;        // per iteration surrogate value
  std::vector<double> wall_ms;           // per iteration
  bool diverged = false;
  int iterations_run = 0;
  int skipped_ratio_steps = 0;
  int skipped_var_steps = 0;
};

// Alternating optimization: per iteration, draw one minibatch and one
// beta ~ q shared by both classifier batches, take ratio_steps_per_q_step
// ADAM steps on theta, then one ADAM step on (lambda, phi) against the
// surrogate with theta frozen. Deterministic given (cfg, seed). The
// optional run_log receives one JSON line per iteration.
FitResult lfvi_fit(const HimModel& model, const Dataset& data, GlobalApprox& q_global,
                   LocalApprox* q_local, RatioEstimator& est, const LfviConfig& cfg,
                   std::ostream* run_log = nullptr);

}  // namespace lfi
