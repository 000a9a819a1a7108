#include "lfi/lfvi.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "lfi/errors.hpp"

namespace lfi {

namespace {

// [M, cov_dim + data_dim] constant block in ratio-layout order.
nd::Tensor gather_fixed(const Dataset& data, const std::vector<int>& idx) {
  int M = static_cast<int>(idx.size());
  int cd = data.has_covariates() ? data.covariates.shape[1] : 0;
  int xd = data.rows.shape[1];
  nd::Tensor out = nd::Tensor::zeros({M, cd + xd});
  for (int i = 0; i < M; ++i) {
    int src = idx[static_cast<std::size_t>(i)];
    for (int j = 0; j < cd; ++j) out.at(i, j) = data.covariates.at(src, j);
    for (int j = 0; j < xd; ++j) out.at(i, cd + j) = data.rows.at(src, j);
  }
  return out;
}

nd::Tensor gather_x(const Dataset& data, const std::vector<int>& idx) {
  int M = static_cast<int>(idx.size());
  int xd = data.rows.shape[1];
  nd::Tensor out = nd::Tensor::zeros({M, xd});
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < xd; ++j) out.at(i, j) = data.rows.at(idx[static_cast<std::size_t>(i)], j);
  return out;
}

bool all_params_finite(GlobalApprox& q, LocalApprox* ql) {
  for (const nd::Tensor* p : q.lambda_params())
    if (!p->all_finite()) return false;
  if (ql)
    for (const auto& p : ql->net().params())
      if (!p.all_finite()) return false;
  return true;
}

}  // namespace

double minibatch_estimate(const std::vector<double>& values, long N) {
  if (values.empty()) throw ContractViolation("minibatch estimate: empty batch");
  double s = 0.0;
  for (double v : values) s += v;
  return s * static_cast<double>(N) / static_cast<double>(values.size());
}

nd::Tape::Id minibatch_estimate_on(nd::Tape& t, nd::Tape::Id values, long N, int M) {
  if (M < 1) throw ContractViolation("minibatch estimate: empty batch");
  return t.scale(t.sum(values), static_cast<double>(N) / static_cast<double>(M));
}

nd::Tape::Id OracleRatio::eval(nd::Tape& t, const nd::Tensor& fixed_pre,
                               std::optional<nd::Tape::Id> z_block,
                               nd::Tape::Id beta_row) const {
  if (z_block) throw ContractViolation("oracle ratio: no local-latent support");
  int cd = model_->covariate_dim();
  int xd = model_->data_dim();
  if (fixed_pre.shape[1] != cd + xd) throw ContractViolation("oracle ratio: block width");
  int M = fixed_pre.shape[0];
  std::vector<nd::Tape::Id> per_row;
  per_row.reserve(static_cast<std::size_t>(M));
  for (int i = 0; i < M; ++i) {
    std::vector<double> cov(static_cast<std::size_t>(cd));
    std::vector<double> x(static_cast<std::size_t>(xd));
    for (int j = 0; j < cd; ++j) cov[static_cast<std::size_t>(j)] = fixed_pre.at(i, j);
    for (int j = 0; j < xd; ++j) x[static_cast<std::size_t>(j)] = fixed_pre.at(i, cd + j);
    auto ll = model_->loglik_row_tape(t, beta_row, x, cd > 0 ? &cov : nullptr);
    per_row.push_back(row_const_ == 0.0 ? ll : t.add_const(ll, row_const_));
  }
  return per_row.size() == 1 ? per_row[0] : t.concat_cols(per_row);
}

void LfviConfig::validate(long n_data) const {
  if (n_iterations < 1 || batch_size < 1 || mc_samples < 1 || ratio_steps_per_q_step < 1)
    throw ConfigError("lfvi: all counts must be positive");
  if (batch_size > n_data) throw ConfigError("lfvi: batch size exceeds data size");
}

SurrogateGraph surrogate_elbo(const HimModel& model, const GlobalApprox& q_global,
                              const LocalApprox* q_local, const RatioFn& ratio,
                              const Dataset& data, const std::vector<int>& batch_idx, long N,
                              int mc_samples, bool trainable, nd::RngStream& rng) {
  if (batch_idx.empty()) throw ContractViolation("surrogate: empty batch");
  if (model.local_dim() > 0 && !q_local)
    throw ContractViolation("surrogate: model has local latents but no local family");

  SurrogateGraph g;
  nd::Tape& t = g.tape;
  g.lambda_ids = q_global.lambda_on_tape(t, trainable);
  if (q_local) g.phi_ids = q_local->phi_on_tape(t, trainable);

  nd::Tensor fixed = gather_fixed(data, batch_idx);
  nd::Tensor x_only = q_local ? gather_x(data, batch_idx) : nd::Tensor{};
  int M = static_cast<int>(batch_idx.size());

  nd::Tape::Id acc = nd::Tape::kNone;
  for (int k = 0; k < mc_samples; ++k) {
    g.sample = q_global.sample_on(t, g.lambda_ids, rng);
    auto entropy = entropy_term_on(t, model, q_global, g.sample);
    std::optional<nd::Tape::Id> z;
    if (q_local) z = q_local->sample_rows(t, x_only, g.sample.beta, g.phi_ids, rng);
    auto r = ratio.eval(t, fixed, z, g.sample.beta);
    auto one = t.add(entropy, minibatch_estimate_on(t, r, N, M));
    acc = k == 0 ? one : t.add(acc, one);
  }
  g.elbo = mc_samples == 1 ? acc : t.scale(acc, 1.0 / mc_samples);
  g.value = t.value(g.elbo).data[0];
  return g;
}

FitResult lfvi_fit(const HimModel& model, const Dataset& data, GlobalApprox& q_global,
                   LocalApprox* q_local, RatioEstimator& est, const LfviConfig& cfg,
                   std::ostream* run_log) {
  cfg.validate(data.n());
  if (q_global.dim() != model.global_dim())
    throw ContractViolation("lfvi: global family dim mismatch");
  if (model.local_dim() > 0 && !q_local)
    throw ContractViolation("lfvi: model has local latents but no local family");
  const RatioLayout& lay = est.layout();
  if (lay.cov_dim != model.covariate_dim() || lay.x_dim != model.data_dim() ||
      lay.z_dim != model.local_dim() || lay.beta_dim != model.global_dim())
    throw ContractViolation("lfvi: ratio layout does not match the model");

  FitResult out;
  nd::AdamState theta_opt(cfg.theta_opt);
  nd::AdamState lambda_opt(cfg.lambda_opt);
  nd::AdamState phi_opt(cfg.phi_opt);
  nd::RngStream root(cfg.seed, 0x1f7156a1);
  EstimatorRatioFn ratio_fn(est);

  int M = cfg.batch_size;
  int cd = model.covariate_dim(), xd = model.data_dim();
  int zd = model.local_dim(), gd = model.global_dim();
  int total = lay.total();

  for (int it = 0; it < cfg.n_iterations; ++it) {
    auto t0 = std::chrono::steady_clock::now();
    nd::RngStream iter_rng = root.substream(static_cast<std::uint64_t>(it));

    nd::RngStream idx_rng = iter_rng.substream(0);
    std::vector<int> batch_idx = nd::sample_without_replacement(data.n(), M, idx_rng);

    nd::RngStream beta_rng = iter_rng.substream(1);

    // One beta ~ q per row, shared by the paired p and q rows: the batch is
    // then a Monte Carlo draw of the nested expectation E_q(beta) E[loss],
    // and the beta input column keeps real spread for the standardizer.
    nd::Tensor p_rows = nd::Tensor::zeros({M, total});
    nd::Tensor q_rows = nd::Tensor::zeros({M, total});
    nd::RngStream sim_rng = iter_rng.substream(2);
    nd::RngStream zq_rng = iter_rng.substream(3);
    for (int i = 0; i < M; ++i) {
      int src = batch_idx[static_cast<std::size_t>(i)];
      std::vector<double> beta = q_global.sample(beta_rng).beta;
      std::vector<double> cov;
      if (cd > 0) cov = data.covariate(src);
      const std::vector<double>* cov_ptr = cd > 0 ? &cov : nullptr;

      nd::RngStream row_rng = sim_rng.substream(static_cast<std::uint64_t>(i));
      std::vector<double> z_sim;
      std::vector<double> x_sim = model.simulate(beta, cov_ptr, row_rng, &z_sim);

      int j = 0;
      for (int k = 0; k < cd; ++k) p_rows.at(i, j++) = cov[static_cast<std::size_t>(k)];
      for (int k = 0; k < xd; ++k) p_rows.at(i, j++) = x_sim[static_cast<std::size_t>(k)];
      for (int k = 0; k < zd; ++k) p_rows.at(i, j++) = z_sim[static_cast<std::size_t>(k)];
      for (int k = 0; k < gd; ++k) p_rows.at(i, j++) = beta[static_cast<std::size_t>(k)];

      std::vector<double> x_obs = data.row(src);
      std::vector<double> z_obs;
      if (zd > 0) z_obs = q_local->sample_row(x_obs, beta, zq_rng);
      j = 0;
      for (int k = 0; k < cd; ++k) q_rows.at(i, j++) = cov[static_cast<std::size_t>(k)];
      for (int k = 0; k < xd; ++k) q_rows.at(i, j++) = x_obs[static_cast<std::size_t>(k)];
      for (int k = 0; k < zd; ++k) q_rows.at(i, j++) = z_obs[static_cast<std::size_t>(k)];
      for (int k = 0; k < gd; ++k) q_rows.at(i, j++) = beta[static_cast<std::size_t>(k)];
    }

    double ratio_loss = 0.0;
    for (int s = 0; s < cfg.ratio_steps_per_q_step; ++s) {
      auto res = ratio_train_step(est, p_rows, q_rows, cfg.loss, theta_opt);
      ratio_loss = res.loss;
      if (res.skipped) ++out.skipped_ratio_steps;
    }

    nd::RngStream var_rng = iter_rng.substream(4);
    SurrogateGraph g = surrogate_elbo(model, q_global, q_local, ratio_fn, data, batch_idx,
                                      data.n(), cfg.mc_samples, true, var_rng);
    if (std::isfinite(g.value)) {
      std::vector<nd::Tape::Id> all_ids = g.lambda_ids;
      all_ids.insert(all_ids.end(), g.phi_ids.begin(), g.phi_ids.end());
      std::vector<nd::Tensor> grads = g.tape.gradient(g.elbo, all_ids);
      // ascent on the surrogate: ADAM minimizes, so negate
      for (auto& gr : grads)
        for (auto& v : gr.data) v = -v;

      std::vector<nd::Tensor> lambda_grads(grads.begin(),
                                           grads.begin() + static_cast<long>(g.lambda_ids.size()));
      bool ok = lambda_opt.step(q_global.lambda_params(), lambda_grads);
      if (q_local) {
        std::vector<nd::Tensor> phi_grads(grads.begin() + static_cast<long>(g.lambda_ids.size()),
                                          grads.end());
        std::vector<nd::Tensor*> phi_params;
        for (auto& p : q_local->net().params()) phi_params.push_back(&p);
        ok = phi_opt.step(phi_params, phi_grads) && ok;
      }
      if (!ok) ++out.skipped_var_steps;
    } else {
      ++out.skipped_var_steps;
    }

    double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                    .count();
    out.ratio_loss_trace.push_back(ratio_loss);
    out.elbo_trace.push_back(g.value);
    out.wall_ms.push_back(ms);
    out.iterations_run = it + 1;

    if (run_log) {
      char buf[160];
      std::snprintf(buf, sizeof buf,
                    "{\"iteration\":%d,\"ratio_loss\":%.17g,\"surrogate_elbo\":%.17g,"
                    "\"wall_ms\":%.3f}",
                    it, ratio_loss, g.value, ms);
      (*run_log) << buf << '\n';
    }

    if (!all_params_finite(q_global, q_local)) {
      out.diverged = true;
      break;
    }
    if (cfg.iteration_hook) cfg.iteration_hook(it);
  }
  return out;
}

}  // namespace lfi
