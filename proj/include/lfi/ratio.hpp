#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "lfi/adam.hpp"
#include "lfi/mlp.hpp"
#include "lfi/running_stats.hpp"
#include "lfi/tape.hpp"
#include "lfi/tensor.hpp"

namespace lfi {

enum class RatioLoss { kLog, kHinge };

// Class-probability losses over raw estimator outputs. The p-class is the
// positive one: log loss = mean softplus(-r_p) + mean softplus(r_q), the
// stable form of -log sigma(r) and -log(1 - sigma(r)). Hinge analogously
// with margins at +-1. The minimizer of either is the log density ratio
// log p / q (hinge up to saturation; it is still used as the log-ratio
// proxy downstream).
double log_loss(const std::vector<double>& r_p, const std::vector<double>& r_q);
double hinge_loss(const std::vector<double>& r_p, const std::vector<double>& r_q);

// Same losses as tape nodes; r_p and r_q hold one value per sample.
nd::Tape::Id log_loss_tape(nd::Tape& t, nd::Tape::Id r_p, nd::Tape::Id r_q);
nd::Tape::Id hinge_loss_tape(nd::Tape& t, nd::Tape::Id r_p, nd::Tape::Id r_q);

using LogDensityFn = std::function<double(const std::vector<double>&)>;

// Exact log p(point) - log q(point); test and diagnostic reference only.
double optimal_ratio_oracle(const LogDensityFn& p_logpdf, const LogDensityFn& q_logpdf,
                            const std::vector<double>& point);

// Column layout of one concatenated estimator input row:
// [covariate | data row | local latent | global latent].
// Slots with zero width are simply absent.
struct RatioLayout {
  int cov_dim = 0;
  int x_dim = 0;
  int z_dim = 0;
  int beta_dim = 0;

  int total() const { return cov_dim + x_dim + z_dim + beta_dim; }
  int pre_beta() const { return cov_dim + x_dim + z_dim; }
};

// MLP logit estimator of the log ratio, with per-column running
// standardization of its raw inputs. Default body: two hidden layers of 64
// relu units; pass an empty hidden list for a purely linear estimator.
class RatioEstimator {
 public:
  explicit RatioEstimator(RatioLayout layout, std::vector<int> hidden = {64, 64});

  void init(nd::RngStream& rng);

  const RatioLayout& layout() const { return layout_; }
  nd::Mlp& net() { return net_; }
  const nd::Mlp& net() const { return net_; }
  nd::RunningStandardizer& stats() { return stats_; }
  const nd::RunningStandardizer& stats() const { return stats_; }

  std::vector<nd::Tape::Id> theta_on_tape(nd::Tape& t, bool trainable) const {
    return net_.params_on_tape(t, trainable);
  }

  // r at one raw input row, current parameters.
  double value(const std::vector<double>& raw_row) const;

  // Raw rows [M, total] as constants; theta_ids decide whether the pass is
  // trainable. Returns the [M, 1] column of r values.
  nd::Tape::Id eval_rows(nd::Tape& t, const nd::Tensor& raw_rows,
                         const std::vector<nd::Tape::Id>& theta_ids) const;

  // Variational-step entry: the [covariate | data] block is a constant,
  // the local latents (if any) and the global row [1, beta_dim] are live
  // nodes, and the network weights are frozen. Gradients flow to z and
  // beta through the standardization affine.
  nd::Tape::Id eval_nodes(nd::Tape& t, const nd::Tensor& fixed_pre,
                          std::optional<nd::Tape::Id> z_block, nd::Tape::Id beta_row) const;

 private:
  RatioLayout layout_;
  nd::Mlp net_;
  nd::RunningStandardizer stats_;
};

struct RatioStepResult {
  double loss = 0.0;
  bool skipped = false;  // non-finite loss or rejected gradient
};

// One ADAM step on theta against the chosen loss. Running input statistics
// are refreshed from the combined batch before the forward pass.
RatioStepResult ratio_train_step(RatioEstimator& est, const nd::Tensor& p_rows,
                                 const nd::Tensor& q_rows, RatioLoss loss, nd::AdamState& opt);

// Ratio plug for the surrogate objective: either a trained estimator or an
// exact-likelihood stand-in. Implementations return one r value per row of
// fixed_pre (any single-axis shape; callers only reduce it).
class RatioFn {
 public:
  virtual ~RatioFn() = default;
  virtual nd::Tape::Id eval(nd::Tape& t, const nd::Tensor& fixed_pre,
                            std::optional<nd::Tape::Id> z_block, nd::Tape::Id beta_row) const = 0;
};

class EstimatorRatioFn : public RatioFn {
 public:
  explicit EstimatorRatioFn(const RatioEstimator& est) : est_(&est) {}
  nd::Tape::Id eval(nd::Tape& t, const nd::Tensor& fixed_pre, std::optional<nd::Tape::Id> z_block,
                    nd::Tape::Id beta_row) const override {
    return est_->eval_nodes(t, fixed_pre, z_block, beta_row);
  }

 private:
  const RatioEstimator* est_;
};

}  // namespace lfi
