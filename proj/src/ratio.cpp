#include "lfi/ratio.hpp"

#include <cmath>

#include "lfi/errors.hpp"
#include "lfi/mathx.hpp"

namespace lfi {

namespace {

void require_nonempty(const std::vector<double>& r_p, const std::vector<double>& r_q) {
  if (r_p.empty() || r_q.empty()) throw ContractViolation("ratio loss: empty sample set");
}

nd::Tensor vstack(const nd::Tensor& a, const nd::Tensor& b) {
  if (a.shape[1] != b.shape[1]) throw ContractViolation("vstack: column mismatch");
  nd::Tensor out = nd::Tensor::zeros({a.shape[0] + b.shape[0], a.shape[1]});
  std::copy(a.data.begin(), a.data.end(), out.data.begin());
  std::copy(b.data.begin(), b.data.end(), out.data.begin() + a.data.size());
  return out;
}

}  // namespace

double log_loss(const std::vector<double>& r_p, const std::vector<double>& r_q) {
  require_nonempty(r_p, r_q);
  double lp = 0.0, lq = 0.0;
  for (double r : r_p) lp += nd::softplus(-r);
  for (double r : r_q) lq += nd::softplus(r);
  return lp / static_cast<double>(r_p.size()) + lq / static_cast<double>(r_q.size());
}

double hinge_loss(const std::vector<double>& r_p, const std::vector<double>& r_q) {
  require_nonempty(r_p, r_q);
  double lp = 0.0, lq = 0.0;
  for (double r : r_p) lp += std::max(0.0, 1.0 - r);
  for (double r : r_q) lq += std::max(0.0, 1.0 + r);
  return lp / static_cast<double>(r_p.size()) + lq / static_cast<double>(r_q.size());
}

nd::Tape::Id log_loss_tape(nd::Tape& t, nd::Tape::Id r_p, nd::Tape::Id r_q) {
  return t.add(t.mean(t.softplus(t.neg(r_p))), t.mean(t.softplus(r_q)));
}

nd::Tape::Id hinge_loss_tape(nd::Tape& t, nd::Tape::Id r_p, nd::Tape::Id r_q) {
  return t.add(t.mean(t.relu(t.add_const(t.neg(r_p), 1.0))),
               t.mean(t.relu(t.add_const(r_q, 1.0))));
}

double optimal_ratio_oracle(const LogDensityFn& p_logpdf, const LogDensityFn& q_logpdf,
                            const std::vector<double>& point) {
  return p_logpdf(point) - q_logpdf(point);
}

RatioEstimator::RatioEstimator(RatioLayout layout, std::vector<int> hidden)
    : layout_(layout),
      net_(nd::MlpConfig{layout.total(), std::move(hidden), 1, false, false}),
      stats_(layout.total()) {
  if (layout_.x_dim <= 0) throw ContractViolation("ratio estimator: x slot required");
  if (layout_.cov_dim < 0 || layout_.z_dim < 0 || layout_.beta_dim < 0)
    throw ContractViolation("ratio estimator: negative slot width");
}

void RatioEstimator::init(nd::RngStream& rng) { net_.init_scaled(rng); }

double RatioEstimator::value(const std::vector<double>& raw_row) const {
  if (static_cast<int>(raw_row.size()) != layout_.total())
    throw ContractViolation("ratio value: row width");
  nd::Tensor row(std::vector<int>{1, layout_.total()}, raw_row);
  return net_.forward_plain(stats_.apply_plain(row)).data[0];
}

nd::Tape::Id RatioEstimator::eval_rows(nd::Tape& t, const nd::Tensor& raw_rows,
                                       const std::vector<nd::Tape::Id>& theta_ids) const {
  if (raw_rows.rank() != 2 || raw_rows.shape[1] != layout_.total())
    throw ContractViolation("ratio eval: rows must be [M, total]");
  auto std_rows = stats_.apply_tape(t, t.constant(raw_rows));
  return net_.forward_tape(t, std_rows, theta_ids);
}

nd::Tape::Id RatioEstimator::eval_nodes(nd::Tape& t, const nd::Tensor& fixed_pre,
                                        std::optional<nd::Tape::Id> z_block,
                                        nd::Tape::Id beta_row) const {
  if (fixed_pre.rank() != 2) throw ContractViolation("ratio eval: fixed block rank");
  int M = fixed_pre.shape[0];
  int fixed_cols = fixed_pre.shape[1];
  int expect_fixed = layout_.cov_dim + layout_.x_dim + (z_block ? 0 : layout_.z_dim);
  if (fixed_cols != expect_fixed) throw ContractViolation("ratio eval: fixed block width");
  if (layout_.beta_dim <= 0) throw ContractViolation("ratio eval: no beta slot");

  std::vector<nd::Tape::Id> parts;
  parts.push_back(t.constant(fixed_pre));
  if (z_block) {
    const std::vector<int> zs = t.value(*z_block).shape;
    if (zs.size() != 2 || zs[0] != M || zs[1] != layout_.z_dim)
      throw ContractViolation("ratio eval: z block shape");
    parts.push_back(*z_block);
  }
  const std::vector<int> bs = t.value(beta_row).shape;
  if (nd::Tensor::extent_product(bs) != layout_.beta_dim)
    throw ContractViolation("ratio eval: beta width");
  parts.push_back(t.broadcast(beta_row, {M, layout_.beta_dim}));

  auto std_rows = stats_.apply_tape(t, t.concat_cols(parts));
  auto theta = net_.params_on_tape(t, false);
  return net_.forward_tape(t, std_rows, theta);
}

RatioStepResult ratio_train_step(RatioEstimator& est, const nd::Tensor& p_rows,
                                 const nd::Tensor& q_rows, RatioLoss loss, nd::AdamState& opt) {
  if (p_rows.rank() != 2 || q_rows.rank() != 2 || p_rows.shape[0] < 1 || q_rows.shape[0] < 1)
    throw ContractViolation("ratio step: both batches must be nonempty");
  est.stats().update(vstack(p_rows, q_rows));

  nd::Tape t;
  auto theta = est.theta_on_tape(t, true);
  auto r_p = est.eval_rows(t, p_rows, theta);
  auto r_q = est.eval_rows(t, q_rows, theta);
  auto L = loss == RatioLoss::kLog ? log_loss_tape(t, r_p, r_q) : hinge_loss_tape(t, r_p, r_q);

  RatioStepResult out;
  out.loss = t.value(L).data[0];
  if (!std::isfinite(out.loss)) {
    out.skipped = true;
    return out;
  }
  auto grads = t.gradient(L, theta);
  std::vector<nd::Tensor*> params;
  params.reserve(est.net().params().size());
  for (auto& p : est.net().params()) params.push_back(&p);
  out.skipped = !opt.step(params, grads);
  return out;
}

}  // namespace lfi
