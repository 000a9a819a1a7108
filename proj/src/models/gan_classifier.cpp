#include "lfi/models/gan_classifier.hpp"

#include <cmath>

#include "lfi/mathx.hpp"

namespace lfi {

GanClassifierModel::GanClassifierModel(int feature_dim, int hidden_dim)
    : feature_dim_(feature_dim), net_([&] {
        nd::MlpConfig cfg;
        cfg.in_dim = feature_dim + 1;  // features plus one noise slot
        cfg.hidden = {hidden_dim};
        cfg.out_dim = 1;
        cfg.layer_norm = true;
        return cfg;
      }()) {
  if (feature_dim <= 0 || hidden_dim <= 0) throw ConfigError("classifier: bad dimensions");
}

double GanClassifierModel::prior_logpdf(const std::vector<double>& beta) const {
  if (static_cast<int>(beta.size()) != global_dim())
    throw ContractViolation("classifier prior: dim mismatch");
  double s = -0.5 * nd::kLog2Pi * global_dim();
  for (double b : beta) s -= 0.5 * b * b;
  return s;
}

nd::Tape::Id GanClassifierModel::prior_logpdf_tape(nd::Tape& t, nd::Tape::Id beta) const {
  double c = -0.5 * nd::kLog2Pi * global_dim();
  return t.add_const(t.scale(t.sum(t.square(beta)), -0.5), c);
}

std::vector<double> GanClassifierModel::prior_sample(nd::RngStream& rng) const {
  return rng.normal_vec(global_dim());
}

double GanClassifierModel::logit(const std::vector<double>& theta,
                                 const std::vector<double>& features, double eps) const {
  if (static_cast<int>(features.size()) != feature_dim_)
    throw ContractViolation("classifier: feature dim mismatch");
  std::vector<double> in = features;
  in.push_back(eps);
  return net_.forward_flat(theta, nd::Tensor::row(std::move(in))).data[0];
}

std::vector<double> GanClassifierModel::simulate_local(const std::vector<double>& eps,
                                                       const std::vector<double>& z,
                                                       const std::vector<double>& beta,
                                                       const std::vector<double>* covariate) const {
  (void)z;
  if (!covariate) throw ContractViolation("classifier: covariate required");
  double out = logit(beta, *covariate, eps[0]);
  return {out >= 0.0 ? 1.0 : -1.0};
}

double gan_classify_forward(const GanClassifierModel& model, const std::vector<double>& theta,
                            const std::vector<double>& features, double eps) {
  return model.logit(theta, features, eps) >= 0.0 ? 1.0 : -1.0;
}

LabelVote predictive_label(const GanClassifierModel& model,
                           const std::vector<std::vector<double>>& theta_samples,
                           const std::vector<double>& features, int n_draws, nd::RngStream& rng) {
  if (theta_samples.empty() || n_draws < 1)
    throw ContractViolation("predictive_label: need samples and draws");
  long plus = 0, total = 0;
  for (const auto& theta : theta_samples) {
    for (int d = 0; d < n_draws; ++d) {
      double y = gan_classify_forward(model, theta, features, rng.normal());
      if (y > 0) ++plus;
      ++total;
    }
  }
  double frac = static_cast<double>(plus) / static_cast<double>(total);
  return {frac >= 0.5 ? 1.0 : -1.0, frac};
}

}  // namespace lfi
