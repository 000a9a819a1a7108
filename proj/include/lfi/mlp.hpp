#pragma once

#include <vector>

#include "lfi/rng.hpp"
#include "lfi/tape.hpp"
#include "lfi/tensor.hpp"

namespace lfi::nd {

struct MlpConfig {
  int in_dim = 0;
  std::vector<int> hidden;
  int out_dim = 1;
  // Parameter-free layer norm (per-row mean/variance over features) before
  // each relu.
  bool layer_norm = false;
  // Apply norm+relu after the last layer too (used by simulator nets whose
  // output feeds another recurrence, not a loss).
  bool activate_output = false;
};

// Dense relu network. Parameters live in canonical order W0,b0,W1,b1,...;
// the flat view concatenates them row-major, so a weight vector drawn
// elementwise from a prior maps deterministically onto the net.
class Mlp {
 public:
  explicit Mlp(MlpConfig cfg);

  const MlpConfig& config() const { return cfg_; }
  int flat_dim() const { return flat_dim_; }
  int n_params() const { return static_cast<int>(params_.size()); }

  std::vector<Tensor>& params() { return params_; }
  const std::vector<Tensor>& params() const { return params_; }

  // Gaussian init with std 1/sqrt(fan_in) per weight matrix, zero biases.
  void init_scaled(RngStream& rng);

  std::vector<double> flatten() const;
  void set_from_flat(const std::vector<double>& flat);

  // X is [B, in_dim]; returns [B, out_dim].
  Tensor forward_plain(const Tensor& X) const;

  // Forward pass reading weights from a flat vector in canonical order,
  // without touching the stored parameters. Lets a sampled weight vector be
  // evaluated concurrently on an immutable net.
  Tensor forward_flat(const std::vector<double>& flat, const Tensor& X) const;

  // Same network on the tape. param_ids must be leaves/nodes shaped like
  // params() in canonical order (pass tape constants to freeze the net).
  Tape::Id forward_tape(Tape& t, Tape::Id X, const std::vector<Tape::Id>& param_ids) const;

  // Convenience: push current params as leaves (trainable) or constants.
  std::vector<Tape::Id> params_on_tape(Tape& t, bool trainable) const;

 private:
  MlpConfig cfg_;
  std::vector<int> dims_;  // in_dim, hidden..., out_dim
  std::vector<Tensor> params_;
  int flat_dim_ = 0;
};

// Parameter-free layer norm over the feature (column) axis of a [B, D] node.
Tape::Id layer_norm_tape(Tape& t, Tape::Id h);
void layer_norm_plain(Tensor& h);

}  // namespace lfi::nd
