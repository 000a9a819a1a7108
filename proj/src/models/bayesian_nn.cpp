#include "lfi/models/bayesian_nn.hpp"

#include <cmath>

#include "lfi/adam.hpp"
#include "lfi/mathx.hpp"

namespace lfi {

using nd::Tape;
using nd::Tensor;

namespace {

Tensor gather_rows(const Tensor& X, const std::vector<int>& idx) {
  Tensor out = Tensor::zeros({static_cast<int>(idx.size()), X.shape[1]});
  for (std::size_t r = 0; r < idx.size(); ++r)
    for (int j = 0; j < X.shape[1]; ++j) out.at(static_cast<int>(r), j) = X.at(idx[r], j);
  return out;
}

// sum over the batch of log p(y_i | x_i, w) = -softplus(-y_i * logit_i)
Tape::Id batch_loglik(Tape& t, const nd::Mlp& net, const std::vector<Tape::Id>& w_ids,
                      const Tensor& Xb, const std::vector<double>& yb) {
  Tape::Id logits = net.forward_tape(t, t.constant(Xb), w_ids);
  Tensor ycol({static_cast<int>(yb.size()), 1}, yb);
  Tape::Id margins = t.mul(logits, t.constant(ycol));
  return t.neg(t.sum(t.softplus(t.neg(margins))));
}

}  // namespace

BayesianNn::BayesianNn(int feature_dim, int hidden_dim)
    : feature_dim_(feature_dim), net_([&] {
        nd::MlpConfig cfg;
        cfg.in_dim = feature_dim;
        cfg.hidden = {hidden_dim};
        cfg.out_dim = 1;
        cfg.layer_norm = true;
        return cfg;
      }()) {
  if (feature_dim <= 0 || hidden_dim <= 0) throw ConfigError("bayesian-nn: bad dimensions");
}

BayesianNn::FitInfo BayesianNn::fit_map(const Tensor& X, const std::vector<double>& y,
                                        int iterations, int batch_size, double lr,
                                        nd::RngStream& rng) {
  int N = X.shape[0];
  if (static_cast<int>(y.size()) != N) throw ContractViolation("bayesian-nn: label count");
  if (batch_size > N) batch_size = N;
  net_.init_scaled(rng);
  nd::AdamConfig ac;
  ac.lr = lr;
  ac.clip_norm = 10.0;
  nd::AdamState opt(ac);
  FitInfo info;

  for (int it = 0; it < iterations; ++it) {
    auto idx = nd::sample_without_replacement(N, batch_size, rng);
    Tensor Xb = gather_rows(X, idx);
    std::vector<double> yb;
    yb.reserve(idx.size());
    for (int i : idx) yb.push_back(y[static_cast<std::size_t>(i)]);

    Tape t;
    std::vector<Tape::Id> w_ids = net_.params_on_tape(t, true);
    Tape::Id ll = batch_loglik(t, net_, w_ids, Xb, yb);
    // log prior: standard normal over every weight
    Tape::Id lp = t.constant(0.0);
    for (Tape::Id w : w_ids) lp = t.add(lp, t.scale(t.sum(t.square(w)), -0.5));
    double scale_n = static_cast<double>(N) / batch_size;
    Tape::Id obj = t.add(t.scale(ll, scale_n), lp);
    Tape::Id loss = t.neg(obj);
    info.objective_trace.push_back(t.value(obj).data[0]);

    auto grads = t.gradient(loss, w_ids);
    std::vector<Tensor*> ps;
    for (Tensor& p : net_.params()) ps.push_back(&p);
    opt.step(ps, grads);
  }
  return info;
}

BayesianNn::FitInfo BayesianNn::fit_vi(const Tensor& X, const std::vector<double>& y,
                                       int iterations, int batch_size, double lr,
                                       nd::RngStream& rng) {
  int N = X.shape[0];
  if (static_cast<int>(y.size()) != N) throw ContractViolation("bayesian-nn: label count");
  if (batch_size > N) batch_size = N;
  net_.init_scaled(rng);
  vi_mu_.clear();
  vi_logsigma_.clear();
  for (const Tensor& p : net_.params()) {
    vi_mu_.push_back(p);  // start the means at the scaled init
    vi_logsigma_.push_back(Tensor::full(p.shape, -3.0));
  }
  nd::AdamConfig ac;
  ac.lr = lr;
  ac.clip_norm = 10.0;
  nd::AdamState opt(ac);
  FitInfo info;

  for (int it = 0; it < iterations; ++it) {
    auto idx = nd::sample_without_replacement(N, batch_size, rng);
    Tensor Xb = gather_rows(X, idx);
    std::vector<double> yb;
    yb.reserve(idx.size());
    for (int i : idx) yb.push_back(y[static_cast<std::size_t>(i)]);

    Tape t;
    std::vector<Tape::Id> mu_ids, ls_ids, w_ids;
    Tape::Id kl = t.constant(0.0);
    for (std::size_t k = 0; k < vi_mu_.size(); ++k) {
      Tape::Id mu = t.leaf(vi_mu_[k]);
      Tape::Id ls = t.leaf(vi_logsigma_[k]);
      mu_ids.push_back(mu);
      ls_ids.push_back(ls);
      Tensor delta = Tensor::zeros(vi_mu_[k].shape);
      for (auto& v : delta.data) v = rng.normal();
      Tape::Id w = t.add(mu, t.mul(t.exp(ls), t.constant(delta)));
      w_ids.push_back(w);
      // KL(N(mu, sigma^2) || N(0,1)) summed elementwise:
      // 0.5 (sigma^2 + mu^2 - 1) - log sigma
      Tape::Id var = t.exp(t.scale(ls, 2.0));
      Tape::Id term = t.sub(t.scale(t.add_const(t.add(var, t.square(mu)), -1.0), 0.5), ls);
      kl = t.add(kl, t.sum(term));
    }
    Tape::Id ll = batch_loglik(t, net_, w_ids, Xb, yb);
    double scale_n = static_cast<double>(N) / batch_size;
    Tape::Id elbo = t.sub(t.scale(ll, scale_n), kl);
    Tape::Id loss = t.neg(elbo);
    info.objective_trace.push_back(t.value(elbo).data[0]);

    std::vector<Tape::Id> all_ids = mu_ids;
    all_ids.insert(all_ids.end(), ls_ids.begin(), ls_ids.end());
    auto grads = t.gradient(loss, all_ids);
    std::vector<Tensor*> ps;
    for (Tensor& p : vi_mu_) ps.push_back(&p);
    for (Tensor& p : vi_logsigma_) ps.push_back(&p);
    opt.step(ps, grads);
  }
  return info;
}

double BayesianNn::predict_prob_map(const std::vector<double>& features) const {
  Tensor X = Tensor::row(features);
  double logit = net_.forward_plain(X).data[0];
  return nd::sigmoid(logit);
}

double BayesianNn::predict_prob_vi(const std::vector<double>& features, int n_samples,
                                   nd::RngStream& rng) const {
  if (!vi_fitted()) throw ContractViolation("bayesian-nn: vi not fitted");
  Tensor X = Tensor::row(features);
  nd::Mlp scratch(net_.config());
  double acc = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    auto& params = scratch.params();
    for (std::size_t k = 0; k < params.size(); ++k) {
      for (std::size_t i = 0; i < params[k].data.size(); ++i) {
        double sigma = std::exp(vi_logsigma_[k].data[i]);
        params[k].data[i] = vi_mu_[k].data[i] + sigma * rng.normal();
      }
    }
    acc += nd::sigmoid(scratch.forward_plain(X).data[0]);
  }
  return acc / n_samples;
}

}  // namespace lfi
