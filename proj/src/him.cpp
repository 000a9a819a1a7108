#include "lfi/him.hpp"

#include "lfi/threads.hpp"

namespace lfi {

Dataset simulate_dataset(const HimModel& model, const std::vector<double>& beta, int n,
                         nd::RngStream& rng, const nd::Tensor* covariates) {
  if (n <= 0) throw ContractViolation("simulate_dataset: n must be positive");
  if (covariates && covariates->shape[0] != n)
    throw ContractViolation("simulate_dataset: covariate row count");
  Dataset out;
  out.rows = nd::Tensor::zeros({n, model.data_dim()});
  if (covariates) out.covariates = *covariates;
  nd::RngStream base = rng.substream(0x5ead5e75);
  nd::parallel_for(n, [&](int i) {
    nd::RngStream local = base.substream(static_cast<std::uint64_t>(i));
    std::vector<double> cov;
    const std::vector<double>* cov_ptr = nullptr;
    if (covariates) {
      cov.resize(static_cast<std::size_t>(covariates->shape[1]));
      for (int j = 0; j < covariates->shape[1]; ++j)
        cov[static_cast<std::size_t>(j)] = covariates->at(i, j);
      cov_ptr = &cov;
    }
    std::vector<double> row = model.simulate(beta, cov_ptr, local);
    for (int j = 0; j < model.data_dim(); ++j) out.rows.at(i, j) = row[static_cast<std::size_t>(j)];
  });
  return out;
}

}  // namespace lfi
