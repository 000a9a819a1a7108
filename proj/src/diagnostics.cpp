#include "lfi/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "lfi/mathx.hpp"

namespace lfi {

namespace {

constexpr double kZ95 = 1.959963984540054;

StabilityCheckpoint make_checkpoint(int iteration, std::vector<double> diffs) {
  StabilityCheckpoint cp;
  cp.iteration = iteration;
  cp.mean = nd::mean_of(diffs);
  cp.variance = nd::var_of(diffs);
  cp.diffs = std::move(diffs);
  return cp;
}

double dataset_diff(const HimModel& model, const Dataset& data,
                    const std::function<double(const std::vector<double>&,
                                               const std::vector<double>*,
                                               const std::vector<double>&)>& r,
                    const std::vector<double>& beta) {
  double d = 0.0;
  for (int i = 0; i < data.n(); ++i) {
    std::vector<double> x = data.row(i);
    std::vector<double> cov;
    const std::vector<double>* covp = nullptr;
    if (data.has_covariates()) {
      cov = data.covariate(i);
      covp = &cov;
    }
    d += model.loglik_row(beta, x, covp) - r(x, covp, beta);
  }
  return d;
}

}  // namespace

StabilityCheckpoint stability_probe(const HimModel& model, const Dataset& data,
                                    const std::function<double(const std::vector<double>&,
                                                               const std::vector<double>*,
                                                               const std::vector<double>&)>& r,
                                    const GlobalApprox& q, int n_beta_draws,
                                    nd::RngStream& rng) {
  if (!model.has_loglik()) throw ContractViolation("stability: model has no likelihood");
  std::vector<double> diffs(static_cast<std::size_t>(n_beta_draws));
  for (int k = 0; k < n_beta_draws; ++k)
    diffs[static_cast<std::size_t>(k)] = dataset_diff(model, data, r, q.sample(rng).beta);
  return make_checkpoint(0, std::move(diffs));
}

StabilityTrace ratio_stability(const HimModel& model, const Dataset& data, GlobalApprox& q,
                               RatioEstimator& est, const StabilityConfig& cfg) {
  if (!model.has_loglik()) throw ContractViolation("stability: model has no likelihood");
  if (model.local_dim() != 0) throw ContractViolation("stability: local latents unsupported");
  if (cfg.checkpoint_every <= 0 || cfg.n_beta_draws <= 0)
    throw ContractViolation("stability: bad checkpoint settings");

  LfviConfig run = cfg.lfvi;
  if (cfg.regime != StabilityRegime::kJoint) {
    run.lambda_opt.lr = 0.0;
    run.phi_opt.lr = 0.0;
  }

  if (cfg.beta_input_gain != 1.0) {
    nd::Tensor& w0 = est.net().params()[0];
    for (int i = est.layout().pre_beta(); i < est.layout().total(); ++i)
      for (int j = 0; j < w0.shape[1]; ++j) w0.at(i, j) *= cfg.beta_input_gain;
  }

  auto ratio_value = [&](const std::vector<double>& x, const std::vector<double>* cov,
                         const std::vector<double>& beta) {
    std::vector<double> raw;
    raw.reserve(x.size() + beta.size() + (cov ? cov->size() : 0));
    if (cov) raw.insert(raw.end(), cov->begin(), cov->end());
    raw.insert(raw.end(), x.begin(), x.end());
    raw.insert(raw.end(), beta.begin(), beta.end());
    return est.value(raw);
  };

  nd::RngStream eval_rng(cfg.lfvi.seed, 0xD1A6);

  // Checkpoint 0 must see the same input affine as later ones, so seed the
  // running standardizer before the first measurement instead of letting
  // the first training batch do it.
  if (!est.stats().seeded()) {
    nd::RngStream warm_rng = eval_rng.substream(0x5EED);
    int cd = model.covariate_dim(), xd = model.data_dim();
    nd::Tensor rows = nd::Tensor::zeros({data.n(), est.layout().total()});
    for (int i = 0; i < data.n(); ++i) {
      std::vector<double> beta = q.sample(warm_rng).beta;
      std::vector<double> x = data.row(i);
      int j = 0;
      if (cd > 0) {
        std::vector<double> cov = data.covariate(i);
        for (int k = 0; k < cd; ++k) rows.at(i, j++) = cov[static_cast<std::size_t>(k)];
      }
      for (int k = 0; k < xd; ++k) rows.at(i, j++) = x[static_cast<std::size_t>(k)];
      for (std::size_t k = 0; k < beta.size(); ++k) rows.at(i, j++) = beta[k];
    }
    est.stats().update(rows);
  }

  StabilityTrace trace;
  int next_checkpoint = 0;
  auto checkpoint = [&](int iteration) {
    nd::RngStream rng = eval_rng.substream(static_cast<std::uint64_t>(next_checkpoint++));
    std::vector<double> diffs(static_cast<std::size_t>(cfg.n_beta_draws));
    for (int k = 0; k < cfg.n_beta_draws; ++k)
      diffs[static_cast<std::size_t>(k)] = dataset_diff(model, data, ratio_value,
                                                        q.sample(rng).beta);
    trace.checkpoints.push_back(make_checkpoint(iteration, std::move(diffs)));
  };

  checkpoint(0);
  run.iteration_hook = [&](int it) {
    if ((it + 1) % cfg.checkpoint_every == 0) checkpoint(it + 1);
  };
  lfvi_fit(model, data, q, nullptr, est, run);
  return trace;
}

std::string stability_csv(const StabilityTrace& trace) {
  std::string out = "iteration,variance,mean_diff\n";
  char buf[96];
  for (const StabilityCheckpoint& cp : trace.checkpoints) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", cp.iteration, cp.variance, cp.mean);
    out += buf;
  }
  return out;
}

NoiseInvertResult noise_invert(const DiffSimulator& g, int eps_dim,
                               const std::vector<double>& x_target,
                               const NoiseInvertConfig& cfg) {
  if (eps_dim <= 0) throw ContractViolation("noise_invert: eps_dim must be positive");
  if (!cfg.start.empty() && static_cast<int>(cfg.start.size()) != eps_dim)
    throw ContractViolation("noise_invert: start size mismatch");

  // 0.5 ||g(eps) - x||^2, so the gradient is exactly J^T (g(eps) - x).
  auto eval = [&](const std::vector<double>& e, std::vector<double>* grad) {
    nd::Tape t;
    nd::Tape::Id eid = t.leaf(nd::Tensor({1, eps_dim}, e));
    nd::Tape::Id x = g(t, eid);
    const std::vector<int> xshape = t.value(x).shape;
    if (nd::Tensor::extent_product(xshape) != static_cast<int>(x_target.size()))
      throw ContractViolation("noise_invert: simulator output size mismatch");
    nd::Tape::Id diff = t.sub(x, t.constant(nd::Tensor(xshape, x_target)));
    nd::Tape::Id loss = t.scale(t.sum(t.square(diff)), 0.5);
    double l = t.value(loss).data[0];
    if (grad) {
      std::vector<nd::Tape::Id> params{eid};
      *grad = t.gradient(loss, params)[0].data;
    }
    return std::sqrt(2.0 * l);  // residual L2 norm
  };

  NoiseInvertResult out;
  out.eps = cfg.start.empty() ? std::vector<double>(static_cast<std::size_t>(eps_dim), 0.0)
                              : cfg.start;
  std::vector<double> grad;
  double residual = eval(out.eps, &grad);
  for (int it = 0; it < cfg.max_iters; ++it) {
    if (residual <= cfg.tol) break;
    double rho = cfg.rho0;
    std::vector<double> cand(out.eps.size());
    double cand_res = residual;
    bool improved = false;
    for (int h = 0; h <= 60; ++h) {
      for (std::size_t j = 0; j < cand.size(); ++j) cand[j] = out.eps[j] - rho * grad[j];
      cand_res = eval(cand, nullptr);
      if (!cfg.backtracking || cand_res < residual) {
        improved = cfg.backtracking ? true : cand_res < residual;
        break;
      }
      rho *= 0.5;
    }
    if (cfg.backtracking && !improved) break;  // zero-gradient stall
    out.eps = cand;
    residual = eval(out.eps, &grad);
    out.iterations = it + 1;
    out.residual_trace.push_back(residual);
  }
  out.residual = residual;
  out.converged = residual <= cfg.tol;
  return out;
}

PosteriorMetrics posterior_metrics(const std::vector<double>& mean,
                                   const std::vector<double>& std,
                                   const std::vector<double>& true_beta) {
  if (mean.size() != std.size() || mean.size() != true_beta.size())
    throw ContractViolation("posterior_metrics: dimension mismatch");
  PosteriorMetrics m;
  for (std::size_t j = 0; j < mean.size(); ++j) {
    m.nlp_true -= nd::normal_logpdf(true_beta[j], mean[j], std[j]);
    m.ci95_contains.push_back(std::abs(true_beta[j] - mean[j]) <= kZ95 * std[j]);
  }
  return m;
}

double kde_logpdf(const std::vector<double>& xs, double at) {
  double sd = nd::stddev_of(xs);
  double iqr = nd::quantile_of(xs, 0.75) - nd::quantile_of(xs, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (spread <= 0.0) spread = std::max(sd, 1e-9);
  double n = static_cast<double>(xs.size());
  double bw = std::max(0.9 * spread * std::pow(n, -0.2), 1e-9);
  double m = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    terms[i] = nd::normal_logpdf(at, xs[i], bw);
    m = std::max(m, terms[i]);
  }
  double s = 0.0;
  for (double t : terms) s += std::exp(t - m);
  return m + std::log(s) - std::log(n);
}

PosteriorMetrics posterior_metrics(const std::vector<std::vector<double>>& samples,
                                   const std::vector<double>& true_beta) {
  if (samples.size() < 100)
    throw ContractViolation("posterior_metrics: need at least 100 samples");
  std::size_t dim = true_beta.size();
  if (samples.front().size() != dim)
    throw ContractViolation("posterior_metrics: dimension mismatch");
  PosteriorMetrics m;
  std::vector<double> col(samples.size());
  for (std::size_t j = 0; j < dim; ++j) {
    for (std::size_t i = 0; i < samples.size(); ++i) col[i] = samples[i][j];
    m.nlp_true -= kde_logpdf(col, true_beta[j]);
    double lo = nd::quantile_of(col, 0.025);
    double hi = nd::quantile_of(col, 0.975);
    m.ci95_contains.push_back(true_beta[j] >= lo && true_beta[j] <= hi);
  }
  return m;
}

}  // namespace lfi
