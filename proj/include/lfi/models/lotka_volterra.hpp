#pragma once

#include <vector>

#include "lfi/him.hpp"

namespace lfi {

struct LvConfig {
  // Rates: dx1/dt = b[0] x1 - b[1] x1 x2, dx2/dt = -b[1] x2 + b[2] x1 x2.
  // With four_param, the predator death rate is its own parameter b[3]:
  // dx2/dt = -b[3] x2 + b[2] x1 x2.
  std::vector<double> beta{0.6, 0.4, 0.3};
  bool four_param = false;
  double init_prey = 50.0;
  double init_predator = 100.0;
  double t_end = 30.0;
  double inner_dt = 0.1;
  double record_every = 0.2;
  double noise_scale = 10.0;  // std of the shocks at integer times

  int beta_dim() const { return four_param ? 4 : 3; }
  void validate() const;
  // Integer times in [0, t_end) at which shocks are applied; two noise draws
  // (prey, predator) per time.
  int noise_count() const;
};

struct Series {
  std::vector<double> times;
  std::vector<double> prey;
  std::vector<double> predator;
  bool diverged = false;

  int size() const { return static_cast<int>(times.size()); }
};

// Explicit Euler at inner_dt with Gaussian shocks at integer times. The state
// is recorded every record_every starting at t=0; shocks at a recording time
// are applied after the value is recorded, so they perturb the dynamics that
// follow, not the snapshot itself. Populations are clamped at 0 after every
// step and after every shock. Non-finite state truncates the series and sets
// the diverged flag. eps supplies the shocks in time order, prey first.
Series lv_simulate_with_noise(const LvConfig& cfg, const std::vector<double>& eps);

Series lv_simulate(const LvConfig& cfg, nd::RngStream& rng);

struct LvPrior {
  std::vector<double> loc;    // per-component lognormal location
  std::vector<double> scale;  // per-component lognormal scale

  static LvPrior defaults(int dim) {
    return LvPrior{std::vector<double>(static_cast<std::size_t>(dim), -1.0),
                   std::vector<double>(static_cast<std::size_t>(dim), 1.0)};
  }
  std::vector<double> sample(nd::RngStream& rng) const;
  // Sum of component lognormal log densities; -inf when any component <= 0.
  double logpdf(const std::vector<double>& beta) const;
};

enum class LvRowKind {
  kSummaries,  // 9 summary statistics per series (default)
  kFlat,       // prey then predator values, concatenated
};

// Each data point is one independently simulated series, compressed to its
// row representation.
class LotkaVolterraModel : public HimModel {
 public:
  LotkaVolterraModel(LvConfig cfg, LvPrior prior, LvRowKind row_kind = LvRowKind::kSummaries);

  int global_dim() const override { return cfg_.beta_dim(); }
  int noise_dim() const override { return cfg_.noise_count(); }
  int data_dim() const override { return data_dim_; }

  double prior_logpdf(const std::vector<double>& beta) const override;
  nd::Tape::Id prior_logpdf_tape(nd::Tape& t, nd::Tape::Id beta) const override;
  std::vector<double> prior_sample(nd::RngStream& rng) const override;

  std::vector<double> simulate_local(const std::vector<double>& eps, const std::vector<double>& z,
                                     const std::vector<double>& beta,
                                     const std::vector<double>* covariate) const override;

  std::vector<double> series_to_row(const Series& s) const;
  const LvConfig& lv_config() const { return cfg_; }
  const LvPrior& prior() const { return prior_; }

 private:
  LvConfig cfg_;
  LvPrior prior_;
  LvRowKind row_kind_;
  int points_ = 0;
  int data_dim_ = 0;
};

}  // namespace lfi
