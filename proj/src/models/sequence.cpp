#include "lfi/models/sequence.hpp"

#include <cmath>

#include "lfi/mathx.hpp"

namespace lfi {

namespace {
constexpr char kChars[] = {'x', '+', '-', '*', '/'};

bool is_op(char c) { return c == '+' || c == '-' || c == '*' || c == '/'; }
}  // namespace

bool cfg_valid(const std::string& s, int max_len) {
  // Every derivation alternates operands and operators: S stays a sequence
  // of odd length with 'x' at even indices. Conversely any such string is
  // derivable by splitting at its last operator, so the characterization is
  // exact.
  if (s.empty() || static_cast<int>(s.size()) > max_len) return false;
  if (s.size() % 2 == 0) return false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i % 2 == 0) {
      if (s[i] != 'x') return false;
    } else {
      if (!is_op(s[i])) return false;
    }
  }
  return true;
}

std::string cfg_sample(nd::RngStream& rng, int max_len, int max_attempts) {
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    // Leftmost expansion with 'S' as the nonterminal marker. Each production
    // replaces one symbol with three, so length only grows; an attempt is
    // abandoned as soon as it cannot fit max_len.
    std::string work = "S";
    bool ok = true;
    while (ok) {
      std::size_t pos = work.find('S');
      if (pos == std::string::npos) break;
      int prod = static_cast<int>(rng.uniform_int(5));
      if (prod == 0) {
        work[pos] = 'x';
      } else {
        std::string expansion = "S S";
        expansion[1] = kChars[prod];
        work = work.substr(0, pos) + expansion + work.substr(pos + 1);
        if (static_cast<int>(work.size()) > max_len) ok = false;
      }
    }
    if (ok) return work;
  }
  return "x";
}

std::vector<int> seq_tokens(const std::string& s) {
  std::vector<int> out;
  out.reserve(s.size());
  for (char c : s) {
    int tok = -1;
    for (int k = 0; k < 5; ++k)
      if (kChars[k] == c) tok = k;
    if (tok < 0) throw ContractViolation("seq_tokens: unknown character");
    out.push_back(tok);
  }
  return out;
}

std::string seq_string(const std::vector<int>& tokens) {
  std::string out;
  out.reserve(tokens.size());
  for (int t : tokens) {
    if (t < 0 || t >= 5) throw ContractViolation("seq_string: token out of range");
    out.push_back(kChars[t]);
  }
  return out;
}

StochasticRnnModel::StochasticRnnModel(SeqRnnConfig cfg)
    : cfg_(cfg), gz_([&] {
        nd::MlpConfig c;
        c.in_dim = kSeqAlphabet + cfg.hidden_dim + cfg.noise_z_dim;
        c.hidden = {cfg.width};
        c.out_dim = cfg.hidden_dim;
        c.layer_norm = true;
        return c;
      }()),
      gx_([&] {
        nd::MlpConfig c;
        c.in_dim = cfg.hidden_dim + cfg.noise_x_dim;
        c.hidden = {cfg.width};
        c.out_dim = kSeqAlphabet;
        c.layer_norm = true;
        return c;
      }()) {
  if (cfg.hidden_dim <= 0 || cfg.width <= 0 || cfg.max_len <= 0 || cfg.noise_z_dim < 0 ||
      cfg.noise_x_dim < 0)
    throw ConfigError("sequence model: bad dimensions");
}

double StochasticRnnModel::prior_logpdf(const std::vector<double>& beta) const {
  if (static_cast<int>(beta.size()) != global_dim())
    throw ContractViolation("sequence prior: dim mismatch");
  double s = -0.5 * nd::kLog2Pi * global_dim();
  for (double b : beta) s -= 0.5 * b * b;
  return s;
}

nd::Tape::Id StochasticRnnModel::prior_logpdf_tape(nd::Tape& t, nd::Tape::Id beta) const {
  double c = -0.5 * nd::kLog2Pi * global_dim();
  return t.add_const(t.scale(t.sum(t.square(beta)), -0.5), c);
}

std::vector<double> StochasticRnnModel::prior_sample(nd::RngStream& rng) const {
  return rng.normal_vec(global_dim());
}

std::vector<int> StochasticRnnModel::generate_tokens(const std::vector<double>& params,
                                                     const std::vector<double>& eps,
                                                     int len) const {
  if (len > cfg_.max_len) throw ContractViolation("sequence: len exceeds max_len");
  if (static_cast<int>(params.size()) != global_dim())
    throw ContractViolation("sequence: param size");
  if (static_cast<int>(eps.size()) < len * (cfg_.noise_z_dim + cfg_.noise_x_dim))
    throw ContractViolation("sequence: not enough noise");

  std::vector<double> gz_flat(params.begin(), params.begin() + gz_.flat_dim());
  std::vector<double> gx_flat(params.begin() + gz_.flat_dim(), params.end());

  std::vector<int> tokens;
  std::vector<double> x_prev(kSeqAlphabet, 0.0);  // start token: all zeros
  std::vector<double> z_prev(static_cast<std::size_t>(cfg_.hidden_dim), 0.0);
  std::size_t k = 0;
  for (int step = 0; step < len; ++step) {
    std::vector<double> in_z = x_prev;
    in_z.insert(in_z.end(), z_prev.begin(), z_prev.end());
    for (int j = 0; j < cfg_.noise_z_dim; ++j) in_z.push_back(eps[k++]);
    nd::Tensor z = gz_.forward_flat(gz_flat, nd::Tensor::row(std::move(in_z)));

    std::vector<double> in_x = z.data;
    for (int j = 0; j < cfg_.noise_x_dim; ++j) in_x.push_back(eps[k++]);
    nd::Tensor scores = gx_.forward_flat(gx_flat, nd::Tensor::row(std::move(in_x)));

    int best = 0;
    for (int j = 1; j < kSeqAlphabet; ++j)
      if (scores.data[static_cast<std::size_t>(j)] > scores.data[static_cast<std::size_t>(best)])
        best = j;
    if (best == kSeqEndToken) break;
    tokens.push_back(best);

    std::fill(x_prev.begin(), x_prev.end(), 0.0);
    x_prev[static_cast<std::size_t>(best)] = 1.0;
    z_prev = z.data;
  }
  return tokens;
}

std::vector<double> StochasticRnnModel::encode(const std::vector<int>& tokens) const {
  if (static_cast<int>(tokens.size()) > cfg_.max_len)
    throw ContractViolation("sequence: too many tokens to encode");
  std::vector<double> row(static_cast<std::size_t>(data_dim()), 0.0);
  std::size_t pos = 0;
  for (int tok : tokens) {
    row[pos * kSeqAlphabet + static_cast<std::size_t>(tok)] = 1.0;
    ++pos;
  }
  if (pos < static_cast<std::size_t>(cfg_.max_len)) row[pos * kSeqAlphabet + kSeqEndToken] = 1.0;
  return row;
}

std::vector<double> StochasticRnnModel::simulate_local(const std::vector<double>& eps,
                                                       const std::vector<double>& z,
                                                       const std::vector<double>& beta,
                                                       const std::vector<double>* covariate) const {
  (void)z;
  (void)covariate;
  return encode(generate_tokens(beta, eps, cfg_.max_len));
}

std::string rnn_generate(const StochasticRnnModel& model, const std::vector<double>& params,
                         nd::RngStream& rng, int len) {
  std::vector<double> eps = rng.normal_vec(model.noise_dim());
  return seq_string(model.generate_tokens(params, eps, len));
}

}  // namespace lfi
