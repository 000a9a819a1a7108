#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lfi/errors.hpp"
#include "lfi/him.hpp"
#include "lfi/rng.hpp"

namespace lfi {

// Maps a dataset to the summary vector the ABC distance is computed on.
using SummaryFn = std::function<std::vector<double>(const Dataset&)>;

// Column means of the data rows. For a model whose dataset is a single
// summary row this is the identity, so it is the default everywhere.
std::vector<double> mean_summary(const Dataset& data);

enum class AbcDistance { kEuclideanStandardized };

struct AbcConfig {
  double epsilon = 1.0;
  int n_simulations = 10000;
  // Pilot prior simulations used to fit the per-dimension distance scale.
  int n_pilot = 100;

  // MCMC-ABC. proposal_std is the spherical std of the random walk, applied
  // on log(beta) when log_space_proposals is set (positive-only parameters).
  double proposal_std = 0.1;
  bool log_space_proposals = false;
  int mcmc_burn_in = 0;
  int mcmc_init_budget = 1000;

  // SMC-ABC. Tolerances come from smc_schedule when nonempty, otherwise the
  // geometric schedule epsilon * smc_decay^(g-1), g = 1..smc_generations.
  int population_size = 200;
  int smc_generations = 3;
  double smc_decay = 0.3;
  std::vector<double> smc_schedule;

  AbcDistance distance = AbcDistance::kEuclideanStandardized;

  // Resolved SMC tolerance schedule, validated strictly decreasing.
  std::vector<double> schedule() const;
  // Throws ConfigError on any violated invariant.
  void validate() const;
};

struct AbcSample {
  std::vector<double> beta;
  double weight = 1.0;
  int generation = 1;
};

struct AbcResult {
  // Rejection: accepted draws, uniform weights. MCMC: post-burn-in chain.
  // SMC: the final population (all generations kept in `generations`).
  std::vector<AbcSample> samples;
  std::vector<std::vector<AbcSample>> generations;

  long long n_sims = 0;      // simulator calls, pilot excluded
  long long n_accepted = 0;  // accepted draws / moves across the whole run
  double rate = 0.0;
  bool aborted = false;      // SMC only: partial output, see abort_reason
  std::string abort_reason;

  std::vector<double> posterior_mean() const;
};

// Per-dimension median absolute deviation of the rows; zero MAD falls back
// to 1 so constant summary dimensions do not blow up the distance.
std::vector<double> mad_scale(const std::vector<std::vector<double>>& rows);

double standardized_distance(const std::vector<double>& a, const std::vector<double>& b,
                             const std::vector<double>& scale);

// Draw beta from the prior, simulate a dataset the size of `observed`,
// accept when the standardized summary distance is within epsilon. Errors
// with advice to raise epsilon if nothing is accepted.
AbcResult rejection_abc(const HimModel& model, const Dataset& observed, const AbcConfig& cfg,
                        nd::RngStream& rng, const SummaryFn& summary = {});

// Marjoram-style ABC-MCMC: random-walk proposal, fresh simulation per step,
// a move is accepted only if its simulation lands within epsilon and the
// prior ratio passes a Metropolis test.
AbcResult mcmc_abc(const HimModel& model, const Dataset& observed, const AbcConfig& cfg,
                   nd::RngStream& rng, const SummaryFn& summary = {});

// Population Monte Carlo over a decaying tolerance schedule. Generation 1 is
// exactly rejection_abc at the first tolerance (same rng consumption), later
// generations resample, perturb with a per-dimension Gaussian kernel, and
// reweight by prior over kernel mixture.
AbcResult smc_abc(const HimModel& model, const Dataset& observed, const AbcConfig& cfg,
                  nd::RngStream& rng, const SummaryFn& summary = {});

std::string abc_sample_jsonl(const AbcSample& s);
std::string acceptance_json(const AbcResult& r);

}  // namespace lfi
