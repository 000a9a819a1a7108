#include "lfi/summaries.hpp"

#include <cmath>

#include "lfi/errors.hpp"
#include "lfi/mathx.hpp"

namespace lfi {

double autocorr(const std::vector<double>& x, int lag) {
  int n = static_cast<int>(x.size());
  if (lag >= n) return 0.0;
  double m = nd::mean_of(x);
  double denom = 0.0;
  for (double v : x) denom += (v - m) * (v - m);
  if (denom == 0.0) return 0.0;
  double num = 0.0;
  for (int t = 0; t + lag < n; ++t)
    num += (x[static_cast<std::size_t>(t)] - m) * (x[static_cast<std::size_t>(t + lag)] - m);
  return num / denom;
}

double crosscorr(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ContractViolation("crosscorr: length mismatch");
  double mx = nd::mean_of(x), my = nd::mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> summary_stats(const std::vector<double>& prey,
                                  const std::vector<double>& predator) {
  if (prey.empty() || prey.size() != predator.size())
    throw ContractViolation("summary_stats: empty or mismatched series");
  return {
      nd::mean_of(prey),
      nd::mean_of(predator),
      std::log(nd::var_of(prey) + 1.0),
      std::log(nd::var_of(predator) + 1.0),
      autocorr(prey, 1),
      autocorr(prey, 2),
      autocorr(predator, 1),
      autocorr(predator, 2),
      crosscorr(prey, predator),
  };
}

}  // namespace lfi
