#include "lfi/mlp.hpp"

#include <cmath>

#include "lfi/errors.hpp"

namespace lfi::nd {

namespace {
constexpr double kNormEps = 1e-5;
}

Mlp::Mlp(MlpConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.in_dim <= 0 || cfg_.out_dim <= 0) throw ContractViolation("mlp: bad dims");
  dims_.push_back(cfg_.in_dim);
  for (int h : cfg_.hidden) {
    if (h <= 0) throw ContractViolation("mlp: bad hidden dim");
    dims_.push_back(h);
  }
  dims_.push_back(cfg_.out_dim);
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    params_.push_back(Tensor::zeros({dims_[l], dims_[l + 1]}));
    params_.push_back(Tensor::zeros({1, dims_[l + 1]}));
  }
  for (const Tensor& p : params_) flat_dim_ += p.size();
}

void Mlp::init_scaled(RngStream& rng) {
  for (std::size_t k = 0; k < params_.size(); k += 2) {
    Tensor& W = params_[k];
    double std = 1.0 / std::sqrt(static_cast<double>(W.shape[0]));
    for (auto& v : W.data) v = rng.normal() * std;
    for (auto& v : params_[k + 1].data) v = 0.0;
  }
}

std::vector<double> Mlp::flatten() const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(flat_dim_));
  for (const Tensor& p : params_) out.insert(out.end(), p.data.begin(), p.data.end());
  return out;
}

void Mlp::set_from_flat(const std::vector<double>& flat) {
  if (static_cast<int>(flat.size()) != flat_dim_)
    throw ContractViolation("mlp: flat size mismatch");
  std::size_t off = 0;
  for (Tensor& p : params_) {
    std::copy(flat.begin() + static_cast<long>(off),
              flat.begin() + static_cast<long>(off + p.data.size()), p.data.begin());
    off += p.data.size();
  }
}

void layer_norm_plain(Tensor& h) {
  int B = h.shape[0], D = h.shape[1];
  for (int i = 0; i < B; ++i) {
    double m = 0.0;
    for (int j = 0; j < D; ++j) m += h.at(i, j);
    m /= D;
    double var = 0.0;
    for (int j = 0; j < D; ++j) {
      double d = h.at(i, j) - m;
      var += d * d;
    }
    var /= D;
    double inv = 1.0 / std::sqrt(var + kNormEps);
    for (int j = 0; j < D; ++j) h.at(i, j) = (h.at(i, j) - m) * inv;
  }
}

namespace {

// Shared dense loop: weights and bias given as raw pointers with row-major
// [in, out] layout.
Tensor dense_forward(const Tensor& h, const double* W, const double* b, int in, int out) {
  int B = h.shape[0];
  Tensor next = Tensor::zeros({B, out});
  for (int i = 0; i < B; ++i) {
    for (int k = 0; k < in; ++k) {
      double hv = h.at(i, k);
      if (hv == 0.0) continue;
      const double* wrow = W + static_cast<std::size_t>(k) * out;
      for (int j = 0; j < out; ++j) next.at(i, j) += hv * wrow[j];
    }
    for (int j = 0; j < out; ++j) next.at(i, j) += b[j];
  }
  return next;
}

}  // namespace

Tensor Mlp::forward_plain(const Tensor& X) const {
  if (X.rank() != 2 || X.shape[1] != cfg_.in_dim)
    throw ContractViolation("mlp: input shape " + X.shape_str());
  Tensor h = X;
  int layers = static_cast<int>(params_.size()) / 2;
  for (int l = 0; l < layers; ++l) {
    const Tensor& W = params_[static_cast<std::size_t>(2 * l)];
    const Tensor& b = params_[static_cast<std::size_t>(2 * l + 1)];
    Tensor next = dense_forward(h, W.data.data(), b.data.data(), W.shape[0], W.shape[1]);
    bool act = (l + 1 < layers) || cfg_.activate_output;
    if (act) {
      if (cfg_.layer_norm) layer_norm_plain(next);
      for (auto& v : next.data) v = v > 0.0 ? v : 0.0;
    }
    h = std::move(next);
  }
  return h;
}

Tensor Mlp::forward_flat(const std::vector<double>& flat, const Tensor& X) const {
  if (static_cast<int>(flat.size()) != flat_dim_)
    throw ContractViolation("mlp: flat size mismatch");
  if (X.rank() != 2 || X.shape[1] != cfg_.in_dim)
    throw ContractViolation("mlp: input shape " + X.shape_str());
  Tensor h = X;
  int layers = static_cast<int>(params_.size()) / 2;
  std::size_t off = 0;
  for (int l = 0; l < layers; ++l) {
    int in = dims_[static_cast<std::size_t>(l)];
    int out = dims_[static_cast<std::size_t>(l + 1)];
    const double* W = flat.data() + off;
    off += static_cast<std::size_t>(in) * out;
    const double* b = flat.data() + off;
    off += static_cast<std::size_t>(out);
    Tensor next = dense_forward(h, W, b, in, out);
    bool act = (l + 1 < layers) || cfg_.activate_output;
    if (act) {
      if (cfg_.layer_norm) layer_norm_plain(next);
      for (auto& v : next.data) v = v > 0.0 ? v : 0.0;
    }
    h = std::move(next);
  }
  return h;
}

Tape::Id layer_norm_tape(Tape& t, Tape::Id h) {
  const Tensor& v = t.value(h);
  if (v.rank() != 2) throw ContractViolation("layer_norm: rank 2 required");
  int B = v.shape[0], D = v.shape[1];
  auto mean_rows = [&](Tape::Id x) {
    // [B,D] x [D,1]/D -> [B,1]
    return t.matmul(x, t.constant(Tensor::full({D, 1}, 1.0 / D)));
  };
  Tape::Id m = t.broadcast(mean_rows(h), {B, D});
  Tape::Id centered = t.sub(h, m);
  Tape::Id var = mean_rows(t.square(centered));
  Tape::Id inv = t.reciprocal_pos(t.sqrt_pos(t.add_const(var, kNormEps)));
  return t.mul(centered, t.broadcast(inv, {B, D}));
}

Tape::Id Mlp::forward_tape(Tape& t, Tape::Id X, const std::vector<Tape::Id>& param_ids) const {
  if (param_ids.size() != params_.size()) throw ContractViolation("mlp: param id count");
  Tape::Id h = X;
  int layers = static_cast<int>(params_.size()) / 2;
  for (int l = 0; l < layers; ++l) {
    Tape::Id W = param_ids[static_cast<std::size_t>(2 * l)];
    Tape::Id b = param_ids[static_cast<std::size_t>(2 * l + 1)];
    h = t.badd(t.matmul(h, W), b);
    bool act = (l + 1 < layers) || cfg_.activate_output;
    if (act) {
      if (cfg_.layer_norm) h = layer_norm_tape(t, h);
      h = t.relu(h);
    }
  }
  return h;
}

std::vector<Tape::Id> Mlp::params_on_tape(Tape& t, bool trainable) const {
  std::vector<Tape::Id> ids;
  ids.reserve(params_.size());
  for (const Tensor& p : params_) ids.push_back(trainable ? t.leaf(p) : t.constant(p));
  return ids;
}

}  // namespace lfi::nd
