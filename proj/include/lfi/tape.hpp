#pragma once

#include <array>
#include <span>
#include <vector>

#include "lfi/tensor.hpp"

namespace lfi::nd {

// Primitive ops recorded on the tape. Everything else (subtraction, division
// by a positive value, sqrt, sigmoid, layer norm, ...) is composed from these
// plus constants.
enum class Op : std::uint8_t {
  kLeaf,
  kAdd,
  kMul,
  kMatMul,
  kRelu,
  kExp,
  kLog,
  kSoftplus,
  kTanh,
  kSum,
  kMean,
  kBroadcast,
  kConcatCols,
};

// Reverse-mode gradient tape. Nodes are append-only; inputs always reference
// earlier nodes, so the reverse sweep is a single backwards pass over the
// node array.
class Tape {
 public:
  using Id = int;
  static constexpr Id kNone = -1;

  struct Node {
    Op op;
    std::array<Id, 2> in{kNone, kNone};
    Tensor value;
    // For kConcatCols with >2 inputs; also reused to remember the
    // pre-broadcast shape.
    std::vector<Id> extra_in;
  };

  Id leaf(Tensor v) { return push(Op::kLeaf, kNone, kNone, std::move(v)); }
  Id constant(Tensor v) { return push(Op::kLeaf, kNone, kNone, std::move(v)); }
  Id constant(double v) { return constant(Tensor::scalar(v)); }

  Id add(Id a, Id b);
  Id mul(Id a, Id b);
  Id matmul(Id a, Id b);
  Id relu(Id a);
  Id exp(Id a);
  Id log(Id a);
  Id softplus(Id a);
  Id tanh(Id a);
  Id sum(Id a);
  Id mean(Id a);
  Id broadcast(Id a, std::vector<int> target_shape);
  // Column-wise concat of matrices with equal row counts (vectors are rows).
  Id concat_cols(const std::vector<Id>& parts);

  // --- composed helpers (no new primitives) ---
  Id neg(Id a) { return mul(a, constant(Tensor::full(value(a).shape, -1.0))); }
  Id sub(Id a, Id b) { return add(a, neg(b)); }
  Id scale(Id a, double c) { return mul(a, constant(Tensor::full(value(a).shape, c))); }
  Id add_const(Id a, double c) { return add(a, constant(Tensor::full(value(a).shape, c))); }
  Id square(Id a) { return mul(a, a); }
  // 1/x and sqrt(x) for strictly positive x.
  Id reciprocal_pos(Id a) { return exp(neg(log(a))); }
  Id sqrt_pos(Id a) { return exp(scale(log(a), 0.5)); }
  Id sigmoid(Id a) { return exp(neg(softplus(neg(a)))); }
  Id log_sigmoid(Id a) { return neg(softplus(neg(a))); }
  // elementwise a*b with numpy-style alignment: the smaller operand is
  // broadcast to the larger one's shape first.
  Id bmul(Id a, Id b);
  Id badd(Id a, Id b);

  const Tensor& value(Id id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  std::size_t size() const { return nodes_.size(); }

  // d(output)/d(param) for each param. Output must be scalar (size 1).
  // Params not on any path to the output get zero gradients. Each node is
  // visited exactly once in the reverse sweep.
  std::vector<Tensor> gradient(Id output, std::span<const Id> params) const;

 private:
  Id push(Op op, Id a, Id b, Tensor v) {
    nodes_.push_back(Node{op, {a, b}, std::move(v), {}});
    return static_cast<Id>(nodes_.size() - 1);
  }
  void check(Id id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
      throw ContractViolation("tape: bad node id");
  }

  std::vector<Node> nodes_;
};

// Broadcast validity: shapes align from the right, source extents equal the
// target's or 1 (missing leading dims count as 1).
bool broadcastable(const std::vector<int>& from, const std::vector<int>& to);

}  // namespace lfi::nd
