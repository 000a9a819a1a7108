#pragma once

#include <vector>

namespace lfi {

// Nine statistics of a (prey, predator) series pair, in this order:
//   mean(prey), mean(pred), log(var(prey)+1), log(var(pred)+1),
//   autocorr(prey, lag 1), autocorr(prey, lag 2),
//   autocorr(pred, lag 1), autocorr(pred, lag 2),
//   crosscorr(prey, pred)
// Variances are population variances; correlations of a zero-variance series
// are defined as 0.
inline constexpr int kSummaryDim = 9;

std::vector<double> summary_stats(const std::vector<double>& prey,
                                  const std::vector<double>& predator);

double autocorr(const std::vector<double>& x, int lag);
double crosscorr(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace lfi
