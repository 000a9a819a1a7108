#include "lfi/variational.hpp"

#include <cmath>
#include <cstdio>

#include "lfi/errors.hpp"
#include "lfi/mathx.hpp"

namespace lfi {

GlobalApprox::GlobalApprox(GlobalKind kind, int dim, double mu0, double sigma0)
    : kind_(kind),
      dim_(dim),
      mu_(nd::Tensor::full({1, dim}, mu0)),
      log_sigma_(nd::Tensor::full({1, dim}, std::log(sigma0))) {
  if (dim < 1) throw ContractViolation("global approx: dim must be positive");
  if (sigma0 <= 0.0) throw ContractViolation("global approx: sigma0 must be positive");
}

std::vector<nd::Tensor*> GlobalApprox::lambda_params() {
  if (kind_ == GlobalKind::kPointMass) return {&mu_};
  return {&mu_, &log_sigma_};
}

std::vector<nd::Tape::Id> GlobalApprox::lambda_on_tape(nd::Tape& t, bool trainable) const {
  std::vector<nd::Tape::Id> ids;
  ids.push_back(trainable ? t.leaf(mu_) : t.constant(mu_));
  if (kind_ != GlobalKind::kPointMass)
    ids.push_back(trainable ? t.leaf(log_sigma_) : t.constant(log_sigma_));
  return ids;
}

GlobalSample GlobalApprox::sample_on(nd::Tape& t, const std::vector<nd::Tape::Id>& lambda_ids,
                                     nd::RngStream& rng) const {
  GlobalSample out;
  if (kind_ == GlobalKind::kPointMass) {
    if (lambda_ids.size() != 1) throw ContractViolation("point mass: one lambda tensor");
    out.beta = lambda_ids[0];
    return out;
  }
  if (lambda_ids.size() != 2) throw ContractViolation("meanfield: two lambda tensors");
  nd::Tape::Id mu = lambda_ids[0], logsig = lambda_ids[1];

  std::vector<double> delta(static_cast<std::size_t>(dim_));
  for (auto& v : delta) v = rng.normal();
  auto delta_c = t.constant(nd::Tensor::row(std::move(delta)));

  auto sigma = t.exp(logsig);
  auto inv_sigma = t.exp(t.neg(logsig));
  auto y = t.add(mu, t.mul(sigma, delta_c));  // underlying gaussian draw

  // density at the draw, written from the live nodes: the backward pass
  // then carries both the sample-path and the explicit lambda dependence
  auto resid = t.mul(t.sub(y, mu), inv_sigma);
  auto normal_part = t.add_const(
      t.add(t.neg(t.sum(logsig)), t.scale(t.sum(t.square(resid)), -0.5)),
      -0.5 * dim_ * nd::kLog2Pi);

  if (kind_ == GlobalKind::kMeanfieldNormal) {
    out.beta = y;
    out.log_q = normal_part;
  } else {
    out.beta = t.exp(y);
    out.log_q = t.sub(normal_part, t.sum(y));  // change of variables
  }
  return out;
}

GlobalApprox::Draw GlobalApprox::sample(nd::RngStream& rng) const {
  Draw d;
  d.beta.resize(static_cast<std::size_t>(dim_));
  if (kind_ == GlobalKind::kPointMass) {
    d.beta.assign(mu_.data.begin(), mu_.data.end());
    return d;
  }
  for (int k = 0; k < dim_; ++k) {
    double mu = mu_.data[static_cast<std::size_t>(k)];
    double sig = std::exp(log_sigma_.data[static_cast<std::size_t>(k)]);
    double y = mu + sig * rng.normal();
    d.beta[static_cast<std::size_t>(k)] =
        kind_ == GlobalKind::kMeanfieldLognormal ? std::exp(y) : y;
  }
  d.log_q = logpdf(d.beta);
  return d;
}

double GlobalApprox::logpdf(const std::vector<double>& beta) const {
  if (kind_ == GlobalKind::kPointMass)
    throw ContractViolation("point mass exposes no density");
  if (static_cast<int>(beta.size()) != dim_) throw ContractViolation("logpdf: beta size");
  double lp = 0.0;
  for (int k = 0; k < dim_; ++k) {
    double mu = mu_.data[static_cast<std::size_t>(k)];
    double sig = std::exp(log_sigma_.data[static_cast<std::size_t>(k)]);
    double b = beta[static_cast<std::size_t>(k)];
    lp += kind_ == GlobalKind::kMeanfieldLognormal ? nd::lognormal_logpdf(b, mu, sig)
                                                   : nd::normal_logpdf(b, mu, sig);
  }
  return lp;
}

std::vector<double> GlobalApprox::sigma() const {
  std::vector<double> s(log_sigma_.data.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::exp(log_sigma_.data[i]);
  return s;
}

LocalApprox::LocalApprox(int z_dim, int x_dim, int beta_dim, int noise_dim, int hidden_width)
    : z_dim_(z_dim),
      x_dim_(x_dim),
      beta_dim_(beta_dim),
      noise_dim_(noise_dim > 0 ? noise_dim : z_dim),
      net_(nd::MlpConfig{(noise_dim > 0 ? noise_dim : z_dim) + x_dim + beta_dim,
                         {hidden_width},
                         z_dim,
                         false,
                         false}) {
  if (z_dim < 1) throw ContractViolation("local approx: z_dim must be positive");
}

nd::Tape::Id LocalApprox::sample_rows(nd::Tape& t, const nd::Tensor& x_rows, nd::Tape::Id beta_row,
                                      const std::vector<nd::Tape::Id>& phi_ids,
                                      nd::RngStream& rng) const {
  if (x_rows.rank() != 2 || x_rows.shape[1] != x_dim_)
    throw ContractViolation("local sample: x rows shape");
  int M = x_rows.shape[0];
  nd::Tensor delta = nd::Tensor::zeros({M, noise_dim_});
  for (auto& v : delta.data) v = rng.normal();

  std::vector<nd::Tape::Id> parts;
  parts.push_back(t.constant(std::move(delta)));
  parts.push_back(t.constant(x_rows));
  parts.push_back(t.broadcast(beta_row, {M, beta_dim_}));
  return net_.forward_tape(t, t.concat_cols(parts), phi_ids);
}

std::vector<double> LocalApprox::sample_row(const std::vector<double>& x_row,
                                            const std::vector<double>& beta,
                                            nd::RngStream& rng) const {
  if (static_cast<int>(x_row.size()) != x_dim_ || static_cast<int>(beta.size()) != beta_dim_)
    throw ContractViolation("local sample: row widths");
  nd::Tensor in = nd::Tensor::zeros({1, noise_dim_ + x_dim_ + beta_dim_});
  int j = 0;
  for (int k = 0; k < noise_dim_; ++k) in.at(0, j++) = rng.normal();
  for (double v : x_row) in.at(0, j++) = v;
  for (double v : beta) in.at(0, j++) = v;
  nd::Tensor out = net_.forward_plain(in);
  return {out.data.begin(), out.data.end()};
}

double entropy_term(const GlobalApprox& q, const std::vector<double>& beta,
                    std::optional<double> log_q, const LogDensityFn& prior_logpdf,
                    bool flat_prior) {
  if (q.kind() == GlobalKind::kPointMass) {
    if (flat_prior) return 0.0;
    return prior_logpdf(beta);
  }
  if (!log_q) throw ContractViolation("entropy term: meanfield draw needs log_q");
  return prior_logpdf(beta) - *log_q;
}

nd::Tape::Id entropy_term_on(nd::Tape& t, const HimModel& model, const GlobalApprox& q,
                             const GlobalSample& s) {
  if (q.kind() == GlobalKind::kPointMass) {
    if (model.flat_prior()) return t.constant(0.0);
    return model.prior_logpdf_tape(t, s.beta);
  }
  if (s.log_q == nd::Tape::kNone)
    throw ContractViolation("entropy term: meanfield sample lost its log_q");
  return t.sub(model.prior_logpdf_tape(t, s.beta), s.log_q);
}

std::string draw_jsonl(const GlobalApprox::Draw& d) {
  std::string line = "{\"beta\":[";
  char buf[40];
  for (std::size_t i = 0; i < d.beta.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", d.beta[i]);
    if (i) line += ',';
    line += buf;
  }
  line += "],\"log_q\":";
  if (d.log_q) {
    std::snprintf(buf, sizeof buf, "%.17g", *d.log_q);
    line += buf;
  } else {
    line += "null";
  }
  line += '}';
  return line;
}

}  // namespace lfi
