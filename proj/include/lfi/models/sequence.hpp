#pragma once

#include <string>
#include <vector>

#include "lfi/him.hpp"
#include "lfi/mlp.hpp"

namespace lfi {

// One-variable arithmetic grammar: S -> x | S+S | S-S | S*S | S/S.
// A string is derivable iff it alternates operand/operator with 'x' at even
// positions, has odd length, and fits in max_len symbols; cfg_valid tests
// exactly that characterization.
bool cfg_valid(const std::string& s, int max_len = 15);

// Expands the start symbol with uniform production choice (leftmost-first).
// Expansions that exceed max_len are rejected and resampled, up to
// max_attempts; after that the base production "x" is returned.
std::string cfg_sample(nd::RngStream& rng, int max_len = 15, int max_attempts = 1000);

// Token indices 0..4 are x + - * /; 5 is the end marker.
inline constexpr int kSeqAlphabet = 6;
inline constexpr int kSeqEndToken = 5;

std::vector<int> seq_tokens(const std::string& s);
std::string seq_string(const std::vector<int>& tokens);

struct SeqRnnConfig {
  int hidden_dim = 8;    // dimension of the latent state z_t
  int width = 16;        // hidden width of the g_z / g_x nets
  int noise_z_dim = 2;   // noise concatenated into g_z's input
  int noise_x_dim = 2;   // noise concatenated into g_x's input
  int max_len = 15;
};

// Noise-injected recurrent generator:
//   z_t = g_z(x_{t-1}, z_{t-1}, eps_z),   token_t = argmax g_x(z_t, eps_x)
// with argmax ties broken toward the lowest token index. x_0 is an all-zero
// start vector (distinct from every one-hot) and z_0 is zero. Generation
// stops at the end marker or at max_len tokens. The flat weight vector of
// both nets is the global latent, with a standard normal prior.
class StochasticRnnModel : public HimModel {
 public:
  explicit StochasticRnnModel(SeqRnnConfig cfg = {});

  int global_dim() const override { return gz_.flat_dim() + gx_.flat_dim(); }
  int noise_dim() const override {
    return cfg_.max_len * (cfg_.noise_z_dim + cfg_.noise_x_dim);
  }
  // Rows are position-wise one-hots over the alphabet, end marker included,
  // zero-padded past the end.
  int data_dim() const override { return cfg_.max_len * kSeqAlphabet; }

  double prior_logpdf(const std::vector<double>& beta) const override;
  nd::Tape::Id prior_logpdf_tape(nd::Tape& t, nd::Tape::Id beta) const override;
  std::vector<double> prior_sample(nd::RngStream& rng) const override;

  std::vector<double> simulate_local(const std::vector<double>& eps, const std::vector<double>& z,
                                     const std::vector<double>& beta,
                                     const std::vector<double>* covariate) const override;

  // eps laid out per step: noise_z_dim for g_z, then noise_x_dim for g_x.
  std::vector<int> generate_tokens(const std::vector<double>& params,
                                   const std::vector<double>& eps, int len) const;

  std::vector<double> encode(const std::vector<int>& tokens) const;

  const SeqRnnConfig& config() const { return cfg_; }

 private:
  SeqRnnConfig cfg_;
  nd::Mlp gz_;
  nd::Mlp gx_;
};

std::string rnn_generate(const StochasticRnnModel& model, const std::vector<double>& params,
                         nd::RngStream& rng, int len);

}  // namespace lfi
