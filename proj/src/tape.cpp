#include "lfi/tape.hpp"

#include <cmath>

#include "lfi/mathx.hpp"

namespace lfi::nd {

namespace {

// Row-major strides for a shape, with 0 stride on broadcast (extent-1) dims.
std::vector<long> broadcast_strides(const std::vector<int>& from, const std::vector<int>& to) {
  std::vector<long> strides(to.size(), 0);
  long s = 1;
  int offset = static_cast<int>(to.size()) - static_cast<int>(from.size());
  for (int d = static_cast<int>(from.size()) - 1; d >= 0; --d) {
    strides[static_cast<std::size_t>(d + offset)] = (from[static_cast<std::size_t>(d)] == 1) ? 0 : s;
    s *= from[static_cast<std::size_t>(d)];
  }
  return strides;
}

}  // namespace

bool broadcastable(const std::vector<int>& from, const std::vector<int>& to) {
  if (from.size() > to.size()) return false;
  int offset = static_cast<int>(to.size()) - static_cast<int>(from.size());
  for (std::size_t d = 0; d < from.size(); ++d) {
    if (from[d] != 1 && from[d] != to[d + static_cast<std::size_t>(offset)]) return false;
  }
  return true;
}

Tape::Id Tape::add(Id a, Id b) {
  check(a);
  check(b);
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (!ta.same_shape(tb))
    throw ContractViolation("add: shape mismatch " + ta.shape_str() + " vs " + tb.shape_str());
  Tensor out = ta;
  for (int i = 0; i < out.size(); ++i) out.data[static_cast<std::size_t>(i)] += tb.data[static_cast<std::size_t>(i)];
  return push(Op::kAdd, a, b, std::move(out));
}

Tape::Id Tape::mul(Id a, Id b) {
  check(a);
  check(b);
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (!ta.same_shape(tb))
    throw ContractViolation("mul: shape mismatch " + ta.shape_str() + " vs " + tb.shape_str());
  Tensor out = ta;
  for (int i = 0; i < out.size(); ++i) out.data[static_cast<std::size_t>(i)] *= tb.data[static_cast<std::size_t>(i)];
  return push(Op::kMul, a, b, std::move(out));
}

Tape::Id Tape::matmul(Id a, Id b) {
  check(a);
  check(b);
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (ta.rank() != 2 || tb.rank() != 2 || ta.shape[1] != tb.shape[0])
    throw ContractViolation("matmul: shapes " + ta.shape_str() + " x " + tb.shape_str());
  int m = ta.shape[0], k = ta.shape[1], n = tb.shape[1];
  Tensor out = Tensor::zeros({m, n});
  for (int i = 0; i < m; ++i) {
    const double* arow = &ta.data[static_cast<std::size_t>(i) * k];
    double* orow = &out.data[static_cast<std::size_t>(i) * n];
    for (int kk = 0; kk < k; ++kk) {
      double av = arow[kk];
      if (av == 0.0) continue;
      const double* brow = &tb.data[static_cast<std::size_t>(kk) * n];
      for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  return push(Op::kMatMul, a, b, std::move(out));
}

Tape::Id Tape::relu(Id a) {
  check(a);
  Tensor out = value(a);
  for (auto& v : out.data) v = v > 0.0 ? v : 0.0;
  return push(Op::kRelu, a, kNone, std::move(out));
}

Tape::Id Tape::exp(Id a) {
  check(a);
  Tensor out = value(a);
  for (auto& v : out.data) v = std::exp(v);
  return push(Op::kExp, a, kNone, std::move(out));
}

Tape::Id Tape::log(Id a) {
  check(a);
  Tensor out = value(a);
  for (auto& v : out.data) v = std::log(v);
  return push(Op::kLog, a, kNone, std::move(out));
}

Tape::Id Tape::softplus(Id a) {
  check(a);
  Tensor out = value(a);
  for (auto& v : out.data) v = lfi::nd::softplus(v);
  return push(Op::kSoftplus, a, kNone, std::move(out));
}

Tape::Id Tape::tanh(Id a) {
  check(a);
  Tensor out = value(a);
  for (auto& v : out.data) v = std::tanh(v);
  return push(Op::kTanh, a, kNone, std::move(out));
}

Tape::Id Tape::sum(Id a) {
  check(a);
  double s = 0.0;
  for (double v : value(a).data) s += v;
  return push(Op::kSum, a, kNone, Tensor::scalar(s));
}

Tape::Id Tape::mean(Id a) {
  check(a);
  const Tensor& ta = value(a);
  if (ta.size() == 0) throw ContractViolation("mean: empty tensor");
  double s = 0.0;
  for (double v : ta.data) s += v;
  return push(Op::kMean, a, kNone, Tensor::scalar(s / ta.size()));
}

Tape::Id Tape::broadcast(Id a, std::vector<int> target_shape) {
  check(a);
  const Tensor& ta = value(a);
  if (!broadcastable(ta.shape, target_shape)) {
    std::string to = "[";
    for (std::size_t i = 0; i < target_shape.size(); ++i)
      to += (i ? "," : "") + std::to_string(target_shape[i]);
    throw ContractViolation("broadcast: " + ta.shape_str() + " -> " + to + "]");
  }
  Tensor out = Tensor::zeros(target_shape);
  auto strides = broadcast_strides(ta.shape, target_shape);
  int rank = static_cast<int>(target_shape.size());
  std::vector<int> idx(static_cast<std::size_t>(rank), 0);
  for (int flat = 0; flat < out.size(); ++flat) {
    long src = 0;
    for (int d = 0; d < rank; ++d) src += idx[static_cast<std::size_t>(d)] * strides[static_cast<std::size_t>(d)];
    out.data[static_cast<std::size_t>(flat)] = ta.data[static_cast<std::size_t>(src)];
    for (int d = rank - 1; d >= 0; --d) {
      if (++idx[static_cast<std::size_t>(d)] < target_shape[static_cast<std::size_t>(d)]) break;
      idx[static_cast<std::size_t>(d)] = 0;
    }
  }
  Id id = push(Op::kBroadcast, a, kNone, std::move(out));
  return id;
}

Tape::Id Tape::concat_cols(const std::vector<Id>& parts) {
  if (parts.empty()) throw ContractViolation("concat_cols: no inputs");
  int rows = -1, total = 0;
  for (Id p : parts) {
    check(p);
    const Tensor& t = value(p);
    int r = t.rank() == 2 ? t.shape[0] : 1;
    int c = t.rank() == 2 ? t.shape[1] : t.size();
    if (rows == -1) rows = r;
    if (r != rows) throw ContractViolation("concat_cols: row mismatch");
    total += c;
  }
  Tensor out = Tensor::zeros({rows, total});
  int off = 0;
  for (Id p : parts) {
    const Tensor& t = value(p);
    int c = t.rank() == 2 ? t.shape[1] : t.size();
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < c; ++j) out.at(i, off + j) = t.data[static_cast<std::size_t>(i) * c + j];
    off += c;
  }
  Node node{Op::kConcatCols, {kNone, kNone}, std::move(out), parts};
  nodes_.push_back(std::move(node));
  return static_cast<Id>(nodes_.size() - 1);
}

Tape::Id Tape::bmul(Id a, Id b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (ta.same_shape(tb)) return mul(a, b);
  if (broadcastable(ta.shape, tb.shape)) return mul(broadcast(a, tb.shape), b);
  if (broadcastable(tb.shape, ta.shape)) return mul(a, broadcast(b, ta.shape));
  throw ContractViolation("bmul: incompatible shapes " + ta.shape_str() + " vs " + tb.shape_str());
}

Tape::Id Tape::badd(Id a, Id b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (ta.same_shape(tb)) return add(a, b);
  if (broadcastable(ta.shape, tb.shape)) return add(broadcast(a, tb.shape), b);
  if (broadcastable(tb.shape, ta.shape)) return add(a, broadcast(b, ta.shape));
  throw ContractViolation("badd: incompatible shapes " + ta.shape_str() + " vs " + tb.shape_str());
}

std::vector<Tensor> Tape::gradient(Id output, std::span<const Id> params) const {
  check(output);
  if (!value(output).is_scalar())
    throw ContractViolation("gradient: output must be scalar, got shape " + value(output).shape_str());
  for (Id p : params) check(p);

  // Adjoints allocated lazily: most nodes below the output never get one.
  std::vector<Tensor> adj(nodes_.size());
  std::vector<bool> has_adj(nodes_.size(), false);
  auto accumulate = [&](Id id, int index, double v) {
    if (!has_adj[static_cast<std::size_t>(id)]) {
      adj[static_cast<std::size_t>(id)] = Tensor::zeros(value(id).shape);
      has_adj[static_cast<std::size_t>(id)] = true;
    }
    adj[static_cast<std::size_t>(id)].data[static_cast<std::size_t>(index)] += v;
  };
  auto ensure = [&](Id id) -> Tensor& {
    if (!has_adj[static_cast<std::size_t>(id)]) {
      adj[static_cast<std::size_t>(id)] = Tensor::zeros(value(id).shape);
      has_adj[static_cast<std::size_t>(id)] = true;
    }
    return adj[static_cast<std::size_t>(id)];
  };

  ensure(output).data[0] = 1.0;

  for (Id id = output; id >= 0; --id) {
    if (!has_adj[static_cast<std::size_t>(id)]) continue;
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    const Tensor& g = adj[static_cast<std::size_t>(id)];
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kAdd: {
        Tensor& ga = ensure(n.in[0]);
        Tensor& gb = ensure(n.in[1]);
        for (int i = 0; i < g.size(); ++i) {
          ga.data[static_cast<std::size_t>(i)] += g.data[static_cast<std::size_t>(i)];
          gb.data[static_cast<std::size_t>(i)] += g.data[static_cast<std::size_t>(i)];
        }
        break;
      }
      case Op::kMul: {
        const Tensor& va = value(n.in[0]);
        const Tensor& vb = value(n.in[1]);
        Tensor& ga = ensure(n.in[0]);
        Tensor& gb = ensure(n.in[1]);
        for (int i = 0; i < g.size(); ++i) {
          ga.data[static_cast<std::size_t>(i)] += g.data[static_cast<std::size_t>(i)] * vb.data[static_cast<std::size_t>(i)];
          gb.data[static_cast<std::size_t>(i)] += g.data[static_cast<std::size_t>(i)] * va.data[static_cast<std::size_t>(i)];
        }
        break;
      }
      case Op::kMatMul: {
        const Tensor& va = value(n.in[0]);
        const Tensor& vb = value(n.in[1]);
        Tensor& ga = ensure(n.in[0]);
        Tensor& gb = ensure(n.in[1]);
        int m = va.shape[0], k = va.shape[1], c = vb.shape[1];
        // dA = G * B^T
        for (int i = 0; i < m; ++i) {
          const double* grow = &g.data[static_cast<std::size_t>(i) * c];
          double* garow = &ga.data[static_cast<std::size_t>(i) * k];
          for (int kk = 0; kk < k; ++kk) {
            const double* brow = &vb.data[static_cast<std::size_t>(kk) * c];
            double s = 0.0;
            for (int j = 0; j < c; ++j) s += grow[j] * brow[j];
            garow[kk] += s;
          }
        }
        // dB = A^T * G
        for (int kk = 0; kk < k; ++kk) {
          double* gbrow = &gb.data[static_cast<std::size_t>(kk) * c];
          for (int i = 0; i < m; ++i) {
            double av = va.data[static_cast<std::size_t>(i) * k + kk];
            if (av == 0.0) continue;
            const double* grow = &g.data[static_cast<std::size_t>(i) * c];
            for (int j = 0; j < c; ++j) gbrow[j] += av * grow[j];
          }
        }
        break;
      }
      case Op::kRelu: {
        const Tensor& va = value(n.in[0]);
        Tensor& ga = ensure(n.in[0]);
        for (int i = 0; i < g.size(); ++i)
          if (va.data[static_cast<std::size_t>(i)] > 0.0)
            ga.data[static_cast<std::size_t>(i)] += g.data[static_cast<std::size_t>(i)];
        break;
      }
      case Op::kExp: {
        Tensor& ga = ensure(n.in[0]);
        for (int i = 0; i < g.size(); ++i)
          ga.data[static_cast<std::size_t>(i)] += g.data[static_cast<std::size_t>(i)] * n.value.data[static_cast<std::size_t>(i)];
        break;
      }
      case Op::kLog: {
        const Tensor& va = value(n.in[0]);
        Tensor& ga = ensure(n.in[0]);
        for (int i = 0; i < g.size(); ++i)
          ga.data[static_cast<std::size_t>(i)] += g.data[static_cast<std::size_t>(i)] / va.data[static_cast<std::size_t>(i)];
        break;
      }
      case Op::kSoftplus: {
        const Tensor& va = value(n.in[0]);
        Tensor& ga = ensure(n.in[0]);
        for (int i = 0; i < g.size(); ++i)
          ga.data[static_cast<std::size_t>(i)] += g.data[static_cast<std::size_t>(i)] * lfi::nd::sigmoid(va.data[static_cast<std::size_t>(i)]);
        break;
      }
      case Op::kTanh: {
        Tensor& ga = ensure(n.in[0]);
        for (int i = 0; i < g.size(); ++i) {
          double y = n.value.data[static_cast<std::size_t>(i)];
          ga.data[static_cast<std::size_t>(i)] += g.data[static_cast<std::size_t>(i)] * (1.0 - y * y);
        }
        break;
      }
      case Op::kSum: {
        Tensor& ga = ensure(n.in[0]);
        double gv = g.data[0];
        for (auto& v : ga.data) v += gv;
        break;
      }
      case Op::kMean: {
        Tensor& ga = ensure(n.in[0]);
        double gv = g.data[0] / value(n.in[0]).size();
        for (auto& v : ga.data) v += gv;
        break;
      }
      case Op::kBroadcast: {
        const Tensor& va = value(n.in[0]);
        Tensor& ga = ensure(n.in[0]);
        auto strides = broadcast_strides(va.shape, n.value.shape);
        int rank = n.value.rank();
        std::vector<int> idx(static_cast<std::size_t>(rank), 0);
        for (int flat = 0; flat < g.size(); ++flat) {
          long src = 0;
          for (int d = 0; d < rank; ++d) src += idx[static_cast<std::size_t>(d)] * strides[static_cast<std::size_t>(d)];
          ga.data[static_cast<std::size_t>(src)] += g.data[static_cast<std::size_t>(flat)];
          for (int d = rank - 1; d >= 0; --d) {
            if (++idx[static_cast<std::size_t>(d)] < n.value.shape[static_cast<std::size_t>(d)]) break;
            idx[static_cast<std::size_t>(d)] = 0;
          }
        }
        break;
      }
      case Op::kConcatCols: {
        int rows = n.value.shape[0];
        int total = n.value.shape[1];
        int off = 0;
        for (Id p : n.extra_in) {
          const Tensor& vp = value(p);
          int c = vp.rank() == 2 ? vp.shape[1] : vp.size();
          Tensor& gp = ensure(p);
          for (int i = 0; i < rows; ++i)
            for (int j = 0; j < c; ++j)
              gp.data[static_cast<std::size_t>(i) * c + j] += g.data[static_cast<std::size_t>(i) * total + off + j];
          off += c;
        }
        break;
      }
    }
  }

  std::vector<Tensor> out;
  out.reserve(params.size());
  for (Id p : params) {
    if (has_adj[static_cast<std::size_t>(p)])
      out.push_back(adj[static_cast<std::size_t>(p)]);
    else
      out.push_back(Tensor::zeros(value(p).shape));
  }
  return out;
}

}  // namespace lfi::nd
