#include "lfi/abc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "lfi/mathx.hpp"
#include "lfi/threads.hpp"

namespace lfi {

namespace {

constexpr std::uint64_t kPilotKey = 0;
constexpr std::uint64_t kCandidateKey = 1;
constexpr std::uint64_t kChainKey = 2;

std::vector<double> apply_summary(const SummaryFn& summary, const Dataset& d) {
  return summary ? summary(d) : mean_summary(d);
}

const nd::Tensor* covariates_of(const Dataset& d) {
  return d.has_covariates() ? &d.covariates : nullptr;
}

// One prior draw plus one simulated dataset, on a private stream pair so the
// result is independent of evaluation order.
struct Candidate {
  std::vector<double> beta;
  std::vector<double> summary;
};

Candidate draw_candidate(const HimModel& model, const Dataset& observed,
                         const SummaryFn& summary, nd::RngStream stream) {
  nd::RngStream beta_rng = stream.substream(0);
  nd::RngStream sim_rng = stream.substream(1);
  Candidate c;
  c.beta = model.prior_sample(beta_rng);
  Dataset sim = simulate_dataset(model, c.beta, observed.n(), sim_rng, covariates_of(observed));
  c.summary = apply_summary(summary, sim);
  return c;
}

std::vector<double> pilot_scale(const HimModel& model, const Dataset& observed,
                                const AbcConfig& cfg, const SummaryFn& summary,
                                nd::RngStream& rng) {
  nd::RngStream root = rng.substream(kPilotKey);
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(cfg.n_pilot));
  nd::parallel_for(cfg.n_pilot, [&](int i) {
    rows[static_cast<std::size_t>(i)] =
        draw_candidate(model, observed, summary, root.substream(static_cast<std::uint64_t>(i)))
            .summary;
  });
  return mad_scale(rows);
}

struct RejectionPhase {
  std::vector<AbcSample> accepted;
  long long n_sims = 0;
};

RejectionPhase rejection_phase(const HimModel& model, const Dataset& observed,
                               const AbcConfig& cfg, const SummaryFn& summary, double epsilon,
                               const std::vector<double>& scale,
                               const std::vector<double>& observed_summary, nd::RngStream& rng) {
  nd::RngStream root = rng.substream(kCandidateKey);
  int n = cfg.n_simulations;
  std::vector<std::vector<double>> betas(static_cast<std::size_t>(n));
  std::vector<double> dist(static_cast<std::size_t>(n));
  nd::parallel_for(n, [&](int i) {
    Candidate c =
        draw_candidate(model, observed, summary, root.substream(static_cast<std::uint64_t>(i)));
    betas[static_cast<std::size_t>(i)] = std::move(c.beta);
    dist[static_cast<std::size_t>(i)] = standardized_distance(c.summary, observed_summary, scale);
  });
  RejectionPhase out;
  out.n_sims = n;
  for (int i = 0; i < n; ++i)
    if (dist[static_cast<std::size_t>(i)] <= epsilon)
      out.accepted.push_back(AbcSample{betas[static_cast<std::size_t>(i)], 1.0, 1});
  double w = out.accepted.empty() ? 0.0 : 1.0 / static_cast<double>(out.accepted.size());
  for (AbcSample& s : out.accepted) s.weight = w;
  return out;
}

double logsumexp(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

std::vector<double> mean_summary(const Dataset& data) {
  if (data.n() == 0) throw ContractViolation("abc: empty dataset");
  int d = data.rows.shape[1];
  std::vector<double> out(static_cast<std::size_t>(d), 0.0);
  for (int i = 0; i < data.n(); ++i)
    for (int j = 0; j < d; ++j) out[static_cast<std::size_t>(j)] += data.rows.at(i, j);
  for (double& v : out) v /= static_cast<double>(data.n());
  return out;
}

std::vector<double> AbcConfig::schedule() const {
  if (!smc_schedule.empty()) return smc_schedule;
  std::vector<double> s(static_cast<std::size_t>(smc_generations));
  double e = epsilon;
  for (int g = 0; g < smc_generations; ++g) {
    s[static_cast<std::size_t>(g)] = e;
    e *= smc_decay;
  }
  return s;
}

void AbcConfig::validate() const {
  if (!(epsilon > 0.0)) throw ConfigError("abc: epsilon must be positive");
  if (n_simulations <= 0) throw ConfigError("abc: n_simulations must be positive");
  if (n_pilot <= 0) throw ConfigError("abc: n_pilot must be positive");
  if (proposal_std < 0.0) throw ConfigError("abc: proposal_std must be nonnegative");
  if (mcmc_burn_in < 0 || mcmc_burn_in >= n_simulations)
    throw ConfigError("abc: mcmc_burn_in must be in [0, n_simulations)");
  if (mcmc_init_budget <= 0) throw ConfigError("abc: mcmc_init_budget must be positive");
  if (population_size <= 0) throw ConfigError("abc: population_size must be positive");
  if (smc_generations <= 0) throw ConfigError("abc: smc_generations must be positive");
  if (!(smc_decay > 0.0 && smc_decay < 1.0))
    throw ConfigError("abc: smc_decay must be in (0, 1)");
  // The geometric schedule is validated where it is used (smc_abc); an
  // explicit schedule is checked here so bad input fails early.
  for (std::size_t g = 0; g < smc_schedule.size(); ++g) {
    if (!(smc_schedule[g] > 0.0)) throw ConfigError("abc: tolerances must be positive");
    if (g > 0 && !(smc_schedule[g] < smc_schedule[g - 1]))
      throw ConfigError("abc: tolerance schedule must be strictly decreasing");
  }
}

std::vector<double> AbcResult::posterior_mean() const {
  if (samples.empty()) return {};
  std::size_t d = samples.front().beta.size();
  std::vector<double> m(d, 0.0);
  double wsum = 0.0;
  for (const AbcSample& s : samples) {
    wsum += s.weight;
    for (std::size_t j = 0; j < d; ++j) m[j] += s.weight * s.beta[j];
  }
  for (double& v : m) v /= wsum;
  return m;
}

std::vector<double> mad_scale(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw ContractViolation("abc: mad_scale needs rows");
  std::size_t d = rows.front().size();
  std::vector<double> scale(d, 1.0);
  std::vector<double> col(rows.size());
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < rows.size(); ++i) col[i] = rows[i][j];
    double med = nd::median_of(col);
    for (double& v : col) v = std::abs(v - med);
    double mad = nd::median_of(col);
    if (mad > 0.0) scale[j] = mad;
  }
  return scale;
}

double standardized_distance(const std::vector<double>& a, const std::vector<double>& b,
                             const std::vector<double>& scale) {
  if (a.size() != b.size() || a.size() != scale.size())
    throw ContractViolation("abc: distance dimension mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    double z = (a[j] - b[j]) / scale[j];
    s += z * z;
  }
  return std::sqrt(s);
}

AbcResult rejection_abc(const HimModel& model, const Dataset& observed, const AbcConfig& cfg,
                        nd::RngStream& rng, const SummaryFn& summary) {
  cfg.validate();
  std::vector<double> obs = apply_summary(summary, observed);
  std::vector<double> scale = pilot_scale(model, observed, cfg, summary, rng);
  RejectionPhase ph =
      rejection_phase(model, observed, cfg, summary, cfg.epsilon, scale, obs, rng);
  if (ph.accepted.empty())
    throw ConfigError("rejection-abc: zero acceptances; raise epsilon or the budget");
  AbcResult r;
  r.samples = std::move(ph.accepted);
  r.n_sims = ph.n_sims;
  r.n_accepted = static_cast<long long>(r.samples.size());
  r.rate = static_cast<double>(r.n_accepted) / static_cast<double>(r.n_sims);
  return r;
}

AbcResult mcmc_abc(const HimModel& model, const Dataset& observed, const AbcConfig& cfg,
                   nd::RngStream& rng, const SummaryFn& summary) {
  cfg.validate();
  int dim = model.global_dim();
  std::vector<double> obs = apply_summary(summary, observed);
  std::vector<double> scale = pilot_scale(model, observed, cfg, summary, rng);

  AbcResult r;
  // Init: first prior draw whose simulation lands within epsilon.
  nd::RngStream init_root = rng.substream(kCandidateKey);
  std::vector<double> beta;
  for (int i = 0; i < cfg.mcmc_init_budget && beta.empty(); ++i) {
    Candidate c = draw_candidate(model, observed, summary,
                                 init_root.substream(static_cast<std::uint64_t>(i)));
    ++r.n_sims;
    if (standardized_distance(c.summary, obs, scale) <= cfg.epsilon) beta = std::move(c.beta);
  }
  if (beta.empty())
    throw ConfigError("mcmc-abc: no starting point within tolerance; raise epsilon or "
                      "mcmc_init_budget");

  double log_prior = model.prior_logpdf(beta);
  nd::RngStream chain_rng = rng.substream(kChainKey);
  std::vector<std::vector<double>> chain;
  chain.reserve(static_cast<std::size_t>(cfg.n_simulations));
  for (int step = 0; step < cfg.n_simulations; ++step) {
    nd::RngStream ss = chain_rng.substream(static_cast<std::uint64_t>(step));
    std::vector<double> prop(static_cast<std::size_t>(dim));
    double log_jacobian = 0.0;
    if (cfg.log_space_proposals) {
      for (int j = 0; j < dim; ++j) {
        double y = std::log(beta[static_cast<std::size_t>(j)]) + cfg.proposal_std * ss.normal();
        prop[static_cast<std::size_t>(j)] = std::exp(y);
        // Symmetric walk on log beta; correct the beta-space density.
        log_jacobian += y - std::log(beta[static_cast<std::size_t>(j)]);
      }
    } else {
      for (int j = 0; j < dim; ++j)
        prop[static_cast<std::size_t>(j)] =
            beta[static_cast<std::size_t>(j)] + cfg.proposal_std * ss.normal();
    }
    double log_prior_prop = model.prior_logpdf(prop);
    if (std::isfinite(log_prior_prop)) {
      Dataset sim = simulate_dataset(model, prop, observed.n(), ss, covariates_of(observed));
      ++r.n_sims;
      if (standardized_distance(apply_summary(summary, sim), obs, scale) <= cfg.epsilon) {
        double log_alpha = log_prior_prop - log_prior + log_jacobian;
        if (log_alpha >= 0.0 || ss.uniform() < std::exp(log_alpha)) {
          beta = std::move(prop);
          log_prior = log_prior_prop;
          ++r.n_accepted;
        }
      }
    }
    chain.push_back(beta);
  }

  r.rate = static_cast<double>(r.n_accepted) / static_cast<double>(cfg.n_simulations);
  std::size_t kept = chain.size() - static_cast<std::size_t>(cfg.mcmc_burn_in);
  r.samples.reserve(kept);
  for (std::size_t i = static_cast<std::size_t>(cfg.mcmc_burn_in); i < chain.size(); ++i)
    r.samples.push_back(AbcSample{std::move(chain[i]), 1.0 / static_cast<double>(kept), 1});
  return r;
}

AbcResult smc_abc(const HimModel& model, const Dataset& observed, const AbcConfig& cfg,
                  nd::RngStream& rng, const SummaryFn& summary) {
  cfg.validate();
  int dim = model.global_dim();
  std::vector<double> tolerances = cfg.schedule();
  for (std::size_t g = 0; g < tolerances.size(); ++g) {
    if (!(tolerances[g] > 0.0) || !std::isfinite(tolerances[g]))
      throw ConfigError("smc-abc: tolerances must be positive and finite");
    if (g > 0 && !(tolerances[g] < tolerances[g - 1]))
      throw ConfigError("smc-abc: tolerance schedule must be strictly decreasing");
  }
  std::vector<double> obs = apply_summary(summary, observed);
  std::vector<double> scale = pilot_scale(model, observed, cfg, summary, rng);

  AbcResult r;
  RejectionPhase ph =
      rejection_phase(model, observed, cfg, summary, tolerances.front(), scale, obs, rng);
  r.n_sims = ph.n_sims;
  if (ph.accepted.empty())
    throw ConfigError("smc-abc: zero acceptances in generation 1; raise the first tolerance");
  r.n_accepted = static_cast<long long>(ph.accepted.size());
  r.generations.push_back(std::move(ph.accepted));

  for (std::size_t g = 1; g < tolerances.size() && !r.aborted; ++g) {
    const std::vector<AbcSample>& prev = r.generations.back();
    double eps = tolerances[g];

    // Weighted per-dimension std of the previous population drives the
    // perturbation kernel. Floored to keep the kernel density finite.
    std::vector<double> kmean(static_cast<std::size_t>(dim), 0.0);
    std::vector<double> kstd(static_cast<std::size_t>(dim), 0.0);
    for (const AbcSample& s : prev)
      for (int j = 0; j < dim; ++j)
        kmean[static_cast<std::size_t>(j)] += s.weight * s.beta[static_cast<std::size_t>(j)];
    for (const AbcSample& s : prev)
      for (int j = 0; j < dim; ++j) {
        double d = s.beta[static_cast<std::size_t>(j)] - kmean[static_cast<std::size_t>(j)];
        kstd[static_cast<std::size_t>(j)] += s.weight * d * d;
      }
    for (int j = 0; j < dim; ++j) {
      double& v = kstd[static_cast<std::size_t>(j)];
      v = std::sqrt(v);
      v = std::max(v, 1e-8 * (1.0 + std::abs(kmean[static_cast<std::size_t>(j)])));
    }
    std::vector<double> cum(prev.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < prev.size(); ++i) {
      acc += prev[i].weight;
      cum[i] = acc;
    }

    // Fill the generation in deterministic rounds: every still-empty slot
    // makes one attempt per round, all attempts on private (particle, round)
    // substreams, so the result is identical for any thread count and spare
    // budget from lucky particles funds the unlucky ones.
    nd::RngStream gen_root = rng.substream(static_cast<std::uint64_t>(kChainKey + g));
    int pop = cfg.population_size;
    std::vector<std::vector<double>> betas(static_cast<std::size_t>(pop));
    std::vector<char> filled(static_cast<std::size_t>(pop), 0);
    long long gen_sims = 0;
    for (int round = 0;; ++round) {
      std::vector<int> todo;
      for (int i = 0; i < pop; ++i)
        if (!filled[static_cast<std::size_t>(i)]) todo.push_back(i);
      if (todo.empty()) break;
      if (gen_sims + static_cast<long long>(todo.size()) > cfg.n_simulations ||
          round >= cfg.n_simulations) {
        r.aborted = true;
        r.abort_reason = "simulation budget exhausted in generation " + std::to_string(g + 1);
        break;
      }
      std::vector<char> simulated(todo.size(), 0);
      nd::parallel_for(static_cast<int>(todo.size()), [&](int k) {
        int i = todo[static_cast<std::size_t>(k)];
        nd::RngStream as = gen_root.substream(static_cast<std::uint64_t>(i))
                               .substream(static_cast<std::uint64_t>(round));
        double u = as.uniform();
        std::size_t pick =
            static_cast<std::size_t>(std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
        pick = std::min(pick, prev.size() - 1);
        std::vector<double> prop(static_cast<std::size_t>(dim));
        for (int j = 0; j < dim; ++j)
          prop[static_cast<std::size_t>(j)] = prev[pick].beta[static_cast<std::size_t>(j)] +
                                              kstd[static_cast<std::size_t>(j)] * as.normal();
        if (!std::isfinite(model.prior_logpdf(prop))) return;
        Dataset sim = simulate_dataset(model, prop, observed.n(), as, covariates_of(observed));
        simulated[static_cast<std::size_t>(k)] = 1;
        if (standardized_distance(apply_summary(summary, sim), obs, scale) <= eps) {
          betas[static_cast<std::size_t>(i)] = std::move(prop);
          filled[static_cast<std::size_t>(i)] = 1;
        }
      });
      for (char c : simulated) gen_sims += c;
    }
    r.n_sims += gen_sims;
    if (r.aborted) break;

    // w_i = prior(beta_i) / sum_j w_j K(beta_i | beta_j), in log space.
    std::vector<double> lw(static_cast<std::size_t>(pop));
    for (int i = 0; i < pop; ++i) {
      const std::vector<double>& b = betas[static_cast<std::size_t>(i)];
      std::vector<double> terms(prev.size());
      for (std::size_t j = 0; j < prev.size(); ++j) {
        double lk = std::log(prev[j].weight);
        for (int d = 0; d < dim; ++d)
          lk += nd::normal_logpdf(b[static_cast<std::size_t>(d)],
                                  prev[j].beta[static_cast<std::size_t>(d)],
                                  kstd[static_cast<std::size_t>(d)]);
        terms[j] = lk;
      }
      lw[static_cast<std::size_t>(i)] = model.prior_logpdf(b) - logsumexp(terms);
    }
    double lz = logsumexp(lw);
    std::vector<AbcSample> popn(static_cast<std::size_t>(pop));
    double wsum = 0.0;
    for (int i = 0; i < pop; ++i) {
      double w = std::exp(lw[static_cast<std::size_t>(i)] - lz);
      popn[static_cast<std::size_t>(i)] =
          AbcSample{std::move(betas[static_cast<std::size_t>(i)]), w, static_cast<int>(g + 1)};
      wsum += w;
    }
    for (AbcSample& s : popn) s.weight /= wsum;
    double ess_den = 0.0;
    for (const AbcSample& s : popn) ess_den += s.weight * s.weight;
    r.n_accepted += pop;
    r.generations.push_back(std::move(popn));
    if (1.0 / ess_den < 5.0) {
      r.aborted = true;
      r.abort_reason = "population collapse (ESS < 5) in generation " + std::to_string(g + 1);
    }
  }

  r.samples = r.generations.back();
  r.rate = static_cast<double>(r.n_accepted) / static_cast<double>(r.n_sims);
  return r;
}

std::string abc_sample_jsonl(const AbcSample& s) {
  char buf[64];
  std::string out = "{\"beta\":[";
  for (std::size_t j = 0; j < s.beta.size(); ++j) {
    std::snprintf(buf, sizeof buf, "%.17g", s.beta[j]);
    if (j) out += ',';
    out += buf;
  }
  out += "],\"weight\":";
  std::snprintf(buf, sizeof buf, "%.17g", s.weight);
  out += buf;
  out += ",\"generation\":" + std::to_string(s.generation) + "}";
  return out;
}

std::string acceptance_json(const AbcResult& r) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", r.rate);
  return "{\"n_sims\":" + std::to_string(r.n_sims) +
         ",\"n_accepted\":" + std::to_string(r.n_accepted) + ",\"rate\":" + buf + "}";
}

}  // namespace lfi
