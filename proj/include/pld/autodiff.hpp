// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "pld/tensor.hpp"

namespace pld::ad {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  bool valid() const noexcept { return tape_ != nullptr; }
  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  const Tensor& value() const;
  /// Gradient after Tape::backward; empty if the node needs no gradient.
  const Tensor& grad() const;
  const Shape& shape() const { return value().shape(); }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode tape. Nodes are recorded in creation order; backward walks
/// them in reverse, so every node's gradient is complete before its own
/// backward rule runs.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value, bool requires_grad = true);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  /// Records an op node. `backward` runs only when the node needs a gradient.
  Var record(Tensor value, std::span<const Var> parents, BackwardFn backward);

  /// Seeds d(loss)/d(loss) = 1 and propagates. Throws ContractError if
  /// `loss` is not a single-element value.
  void backward(Var loss);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  const Tensor& grad(std::size_t id) const { return nodes_[id].grad; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  /// Adds `g` into the gradient of node `id` if it needs one.
  void accumulate(std::size_t id, const Tensor& g);
  /// Writable gradient buffer for node `id`, allocated on first use. Only
  /// valid for nodes that need a gradient.
  Tensor& grad_buffer(std::size_t id);

  std::size_t size() const noexcept { return nodes_.size(); }

  /// Hash of every rectifier activation pattern recorded so far. Two
  /// evaluations with equal signatures took the same branch at every kink.
  std::uint64_t relu_signature() const noexcept { return relu_hash_; }
  void mix_relu_pattern(std::uint64_t h) noexcept;

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
  std::uint64_t relu_hash_ = 0x243F6A8885A308D3ull;
};

/// Zero-padded, stride-1 2-D cross-correlation. x: (N,C,H,W), w: (O,C,kh,kw),
/// b: (O) or an invalid Var for no bias.
Var conv2d(Var x, Var w, Var b = {});
Var relu(Var x);
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Elementwise product of equal shapes.
Var mul(Var a, Var b);
Var scale(double s, Var a);
/// Elementwise product with a constant tensor of the same shape.
Var mul_const(Var a, const Tensor& c);
Var sub_const(Var a, const Tensor& c);
/// Batch slice [start, start+count) along axis 0 of a rank-4 value.
Var slice_batch(Var x, std::size_t start, std::size_t count);
/// Concatenation along axis 0 of rank-4 values with equal trailing shape.
Var concat_batch(std::span<const Var> parts);
/// sum_i w_i x_i^2 as a scalar of shape {1}.
Var weighted_sum_squares(Var x, const Tensor& w);
/// mean_i x_i^2 as a scalar of shape {1}.
Var mean_squares(Var x);
/// Copy of the value with no gradient path.
Var detach(Var x);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(double s, Var a) { return scale(s, a); }

}  // namespace pld::ad
