#include "lfi/models/lotka_volterra.hpp"

#include <cmath>

#include "lfi/mathx.hpp"
#include "lfi/summaries.hpp"

namespace lfi {

namespace {

bool near_integer(double x) { return std::abs(x - std::round(x)) < 1e-9; }

}  // namespace

void LvConfig::validate() const {
  if (static_cast<int>(beta.size()) != beta_dim())
    throw ConfigError("lotka-volterra: beta must have " + std::to_string(beta_dim()) +
                      " components");
  if (inner_dt <= 0 || record_every <= 0 || t_end <= 0)
    throw ConfigError("lotka-volterra: time settings must be positive");
  if (init_prey < 0 || init_predator < 0)
    throw ConfigError("lotka-volterra: initial populations must be nonnegative");
  if (noise_scale < 0) throw ConfigError("lotka-volterra: noise_scale must be nonnegative");
  if (!near_integer(record_every / inner_dt))
    throw ConfigError("lotka-volterra: record_every must be an integer multiple of inner_dt");
  if (noise_scale > 0 && !near_integer(1.0 / inner_dt))
    throw ConfigError("lotka-volterra: with noise, 1/inner_dt must be an integer");
}

int LvConfig::noise_count() const {
  if (noise_scale <= 0) return 0;
  // shocks at t = 0, 1, ..., strictly before t_end
  long times = static_cast<long>(std::ceil(t_end - 1e-9));
  return static_cast<int>(2 * times);
}

Series lv_simulate_with_noise(const LvConfig& cfg, const std::vector<double>& eps) {
  cfg.validate();
  if (static_cast<int>(eps.size()) < cfg.noise_count())
    throw ContractViolation("lv_simulate: not enough noise draws");

  long steps_total = std::llround(cfg.t_end / cfg.inner_dt);
  long per_record = std::llround(cfg.record_every / cfg.inner_dt);
  long per_unit = cfg.noise_scale > 0 ? std::llround(1.0 / cfg.inner_dt) : 0;

  double b1 = cfg.beta[0];
  double b2 = cfg.beta[1];
  double b3 = cfg.beta[2];
  double death = cfg.four_param ? cfg.beta[3] : cfg.beta[1];

  Series out;
  double x1 = cfg.init_prey;
  double x2 = cfg.init_predator;
  std::size_t k = 0;
  for (long s = 0; s <= steps_total; ++s) {
    if (s > 0) {
      double d1 = b1 * x1 - b2 * x1 * x2;
      double d2 = -death * x2 + b3 * x1 * x2;
      x1 += cfg.inner_dt * d1;
      x2 += cfg.inner_dt * d2;
      if (!std::isfinite(x1) || !std::isfinite(x2)) {
        out.diverged = true;
        break;
      }
      if (x1 < 0) x1 = 0;
      if (x2 < 0) x2 = 0;
    }
    if (s % per_record == 0) {
      out.times.push_back(static_cast<double>(s) * cfg.inner_dt);
      out.prey.push_back(x1);
      out.predator.push_back(x2);
    }
    if (per_unit > 0 && s % per_unit == 0 && s < steps_total) {
      x1 += cfg.noise_scale * eps[k++];
      x2 += cfg.noise_scale * eps[k++];
      if (x1 < 0) x1 = 0;
      if (x2 < 0) x2 = 0;
    }
  }
  return out;
}

Series lv_simulate(const LvConfig& cfg, nd::RngStream& rng) {
  cfg.validate();
  std::vector<double> eps = rng.normal_vec(cfg.noise_count());
  return lv_simulate_with_noise(cfg, eps);
}

std::vector<double> LvPrior::sample(nd::RngStream& rng) const {
  std::vector<double> out(loc.size());
  for (std::size_t i = 0; i < loc.size(); ++i)
    out[i] = std::exp(loc[i] + scale[i] * rng.normal());
  return out;
}

double LvPrior::logpdf(const std::vector<double>& beta) const {
  if (beta.size() != loc.size()) throw ContractViolation("lv prior: dim mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < loc.size(); ++i) s += nd::lognormal_logpdf(beta[i], loc[i], scale[i]);
  return s;
}

LotkaVolterraModel::LotkaVolterraModel(LvConfig cfg, LvPrior prior, LvRowKind row_kind)
    : cfg_(std::move(cfg)), prior_(std::move(prior)), row_kind_(row_kind) {
  cfg_.validate();
  if (static_cast<int>(prior_.loc.size()) != cfg_.beta_dim() ||
      static_cast<int>(prior_.scale.size()) != cfg_.beta_dim())
    throw ConfigError("lotka-volterra: prior dimension mismatch");
  points_ = static_cast<int>(std::floor(cfg_.t_end / cfg_.record_every)) + 1;
  data_dim_ = row_kind_ == LvRowKind::kSummaries ? kSummaryDim : 2 * points_;
}

double LotkaVolterraModel::prior_logpdf(const std::vector<double>& beta) const {
  return prior_.logpdf(beta);
}

nd::Tape::Id LotkaVolterraModel::prior_logpdf_tape(nd::Tape& t, nd::Tape::Id beta) const {
  // Sum over components of the lognormal log density:
  //   -0.5 log 2pi - log scale_k - 0.5 ((log b_k - loc_k)/scale_k)^2 - log b_k
  int G = global_dim();
  // copy: growing the tape below invalidates references into it
  const std::vector<int> bshape = t.value(beta).shape;
  if (nd::Tensor::extent_product(bshape) != G)
    throw ContractViolation("lv prior tape: beta size");
  std::vector<double> negloc(static_cast<std::size_t>(G));
  std::vector<double> invscale(static_cast<std::size_t>(G));
  double const_part = 0.0;
  for (int k = 0; k < G; ++k) {
    negloc[static_cast<std::size_t>(k)] = -prior_.loc[static_cast<std::size_t>(k)];
    invscale[static_cast<std::size_t>(k)] = 1.0 / prior_.scale[static_cast<std::size_t>(k)];
    const_part += -0.5 * nd::kLog2Pi - std::log(prior_.scale[static_cast<std::size_t>(k)]);
  }
  auto lb = t.log(beta);
  auto shifted = t.add(lb, t.constant(nd::Tensor(bshape, negloc)));
  auto zed = t.mul(shifted, t.constant(nd::Tensor(bshape, invscale)));
  auto quad = t.scale(t.sum(t.square(zed)), -0.5);
  auto jac = t.scale(t.sum(lb), -1.0);
  return t.add(t.add(quad, jac), t.constant(nd::Tensor::scalar(const_part)));
}

std::vector<double> LotkaVolterraModel::prior_sample(nd::RngStream& rng) const {
  return prior_.sample(rng);
}

std::vector<double> LotkaVolterraModel::series_to_row(const Series& s) const {
  if (row_kind_ == LvRowKind::kSummaries) return summary_stats(s.prey, s.predator);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(2 * points_));
  // diverged series are truncated; pad with the last value so the row shape
  // is stable
  for (int i = 0; i < points_; ++i) {
    int j = std::min(i, s.size() - 1);
    out.push_back(s.prey[static_cast<std::size_t>(j)]);
  }
  for (int i = 0; i < points_; ++i) {
    int j = std::min(i, s.size() - 1);
    out.push_back(s.predator[static_cast<std::size_t>(j)]);
  }
  return out;
}

std::vector<double> LotkaVolterraModel::simulate_local(const std::vector<double>& eps,
                                                       const std::vector<double>& z,
                                                       const std::vector<double>& beta,
                                                       const std::vector<double>* covariate) const {
  (void)z;
  (void)covariate;
  LvConfig cfg = cfg_;
  cfg.beta = beta;
  Series s = lv_simulate_with_noise(cfg, eps);
  return series_to_row(s);
}

}  // namespace lfi
