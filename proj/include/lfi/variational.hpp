#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lfi/him.hpp"
#include "lfi/mlp.hpp"
#include "lfi/ratio.hpp"
#include "lfi/rng.hpp"
#include "lfi/tape.hpp"
#include "lfi/tensor.hpp"

namespace lfi {

enum class GlobalKind { kMeanfieldNormal, kMeanfieldLognormal, kPointMass };

// Nodes of one reparameterized draw. beta is [1, dim] and depends on the
// lambda nodes; log_q is the density of the draw under q, built from the
// same nodes so the pathwise gradient carries both the sample path and the
// explicit parameter dependence. Point masses have no log_q.
struct GlobalSample {
  nd::Tape::Id beta = nd::Tape::kNone;
  nd::Tape::Id log_q = nd::Tape::kNone;
};

// Mean-field variational family over the global latent, or a point mass
// for variational EM. Scales are stored as log-scales; the positive-support
// variant samples beta = exp(mu + sigma * delta) with the Jacobian folded
// into its logpdf.
class GlobalApprox {
 public:
  GlobalApprox(GlobalKind kind, int dim, double mu0 = 0.0, double sigma0 = 0.5);

  GlobalKind kind() const { return kind_; }
  int dim() const { return dim_; }

  // lambda tensors: {mu, log_sigma} for meanfield kinds, {point} for the
  // point mass. lambda_on_tape pushes them in the same order.
  std::vector<nd::Tensor*> lambda_params();
  std::vector<nd::Tape::Id> lambda_on_tape(nd::Tape& t, bool trainable) const;

  // One draw on the tape, depending on the given lambda nodes.
  GlobalSample sample_on(nd::Tape& t, const std::vector<nd::Tape::Id>& lambda_ids,
                         nd::RngStream& rng) const;

  struct Draw {
    std::vector<double> beta;
    std::optional<double> log_q;
  };
  Draw sample(nd::RngStream& rng) const;

  // Exact density of the mean-field kinds; the point mass has none.
  double logpdf(const std::vector<double>& beta) const;

  const nd::Tensor& mu() const { return mu_; }
  const nd::Tensor& log_sigma() const { return log_sigma_; }
  nd::Tensor& mu() { return mu_; }
  nd::Tensor& log_sigma() { return log_sigma_; }
  std::vector<double> sigma() const;

 private:
  GlobalKind kind_;
  int dim_;
  nd::Tensor mu_;         // the point itself for kPointMass
  nd::Tensor log_sigma_;  // unused for kPointMass
};

// Amortized implicit local family: z_n = MLP_phi(concat(delta_n, x_n, beta)),
// delta_n standard normal. No density is exposed anywhere; the family is
// usable only through sampling.
class LocalApprox {
 public:
  LocalApprox(int z_dim, int x_dim, int beta_dim, int noise_dim = 0, int hidden_width = 64);

  int z_dim() const { return z_dim_; }
  int noise_dim() const { return noise_dim_; }

  nd::Mlp& net() { return net_; }
  const nd::Mlp& net() const { return net_; }
  std::vector<nd::Tape::Id> phi_on_tape(nd::Tape& t, bool trainable) const {
    return net_.params_on_tape(t, trainable);
  }

  // [M, z_dim] node for the given data rows and the live beta row node.
  nd::Tape::Id sample_rows(nd::Tape& t, const nd::Tensor& x_rows, nd::Tape::Id beta_row,
                           const std::vector<nd::Tape::Id>& phi_ids, nd::RngStream& rng) const;

  // Plain draw for one row (frozen phi), used when building ratio batches.
  std::vector<double> sample_row(const std::vector<double>& x_row,
                                 const std::vector<double>& beta, nd::RngStream& rng) const;

 private:
  int z_dim_;
  int x_dim_;
  int beta_dim_;
  int noise_dim_;
  nd::Mlp net_;
};

// First term of the surrogate objective: log p(beta) - log q(beta) for
// mean-field kinds, log p(lambda) for a point mass (its entropy is an
// additive constant), and exactly zero for a point mass under a flat prior.
double entropy_term(const GlobalApprox& q, const std::vector<double>& beta,
                    std::optional<double> log_q, const LogDensityFn& prior_logpdf,
                    bool flat_prior);

// Same term as a tape node, with the prior taken from the model.
nd::Tape::Id entropy_term_on(nd::Tape& t, const HimModel& model, const GlobalApprox& q,
                             const GlobalSample& s);

// One posterior draw as a JSON object: {"beta": [...], "log_q": number|null}.
std::string draw_jsonl(const GlobalApprox::Draw& d);

}  // namespace lfi
