// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#include "pld/autodiff.hpp"

#include <algorithm>
#include <string>

#include "pld/errors.hpp"
#include "pld/kernels.hpp"
#include "pld/rng.hpp"

namespace pld::ad {

const Tensor& Var::value() const { return tape_->value(id_); }
const Tensor& Var::grad() const { return tape_->grad(id_); }

Var Tape::leaf(Tensor value, bool requires_grad) {
  nodes_.push_back(Node{std::move(value), Tensor(), requires_grad, nullptr});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::span<const Var> parents, BackwardFn backward) {
  bool needs = false;
  for (const Var& p : parents) {
    if (&p.tape() != this) throw ContractError("autodiff: operands live on different tapes");
    needs |= nodes_[p.id()].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), Tensor(), needs, needs ? std::move(backward) : nullptr});
  return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

void Tape::accumulate(std::size_t id, const Tensor& g) {
  if (!nodes_[id].requires_grad) return;
  grad_buffer(id) += g;
}

void Tape::backward(Var loss) {
  if (&loss.tape() != this) throw ContractError("backward: loss belongs to another tape");
  if (nodes_[loss.id()].value.size() != 1)
    throw ContractError("backward: loss must be a scalar, got shape " +
                        shape_string(nodes_[loss.id()].value.shape()));
  for (auto& n : nodes_) n.grad = Tensor();
  if (!nodes_[loss.id()].requires_grad) return;
  grad_buffer(loss.id())[0] = 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.backward || n.grad.empty()) continue;
    n.backward(*this, i);
  }
}

void Tape::mix_relu_pattern(std::uint64_t h) noexcept { relu_hash_ = splitmix64(relu_hash_ ^ h); }

namespace {

void same_shape(Var a, Var b, const char* op) { require_same_shape(a.value(), b.value(), op); }

kernels::ConvShape conv_shape(const Tensor& x, const Tensor& w) {
  if (x.rank() != 4 || w.rank() != 4)
    throw ParameterError("conv2d: expected rank-4 input and weight, got " + shape_string(x.shape()) + " and " +
                         shape_string(w.shape()));
  if (x.extent(1) != w.extent(1))
    throw ParameterError("conv2d: input has " + std::to_string(x.extent(1)) + " channels, weight expects " +
                         std::to_string(w.extent(1)));
  kernels::ConvShape s{x.extent(0), x.extent(1), w.extent(0), x.extent(2), x.extent(3), w.extent(2), w.extent(3)};
  kernels::validate(s);
  if (s.kernel_h > 2 * s.height + 1 || s.kernel_w > 2 * s.width + 1)
    throw ParameterError("conv2d: kernel " + shape_string(w.shape()) + " exceeds image " + shape_string(x.shape()));
  return s;
}

}  // namespace

Var conv2d(Var x, Var w, Var b) {
  const auto s = conv_shape(x.value(), w.value());
  if (b.valid() && (b.value().rank() != 1 || b.value().size() != s.out_channels))
    throw ParameterError("conv2d: bias must have shape [" + std::to_string(s.out_channels) + "]");
  Tensor out({s.batch, s.out_channels, s.height, s.width});
  kernels::conv2d_forward(s, x.value().data(), w.value().data(),
                          b.valid() ? b.value().data() : std::span<const double>{}, out.data());
  std::vector<Var> parents = {x, w};
  if (b.valid()) parents.push_back(b);
  const std::size_t xi = x.id(), wi = w.id(), bi = b.valid() ? b.id() : SIZE_MAX;
  return x.tape().record(std::move(out), parents, [s, xi, wi, bi](Tape& t, std::size_t self) {
    const auto g = t.grad(self).data();
    if (t.requires_grad(xi)) kernels::conv2d_backward_input(s, g, t.value(wi).data(), t.grad_buffer(xi).data());
    const bool gw = t.requires_grad(wi);
    const bool gb = bi != SIZE_MAX && t.requires_grad(bi);
    if (gw || gb) {
      Tensor scratch_w;
      std::span<double> dw;
      if (gw) {
        dw = t.grad_buffer(wi).data();
      } else {
        scratch_w = Tensor(t.value(wi).shape());
        dw = scratch_w.data();
      }
      kernels::conv2d_backward_weight(s, t.value(xi).data(), g, dw, gb ? t.grad_buffer(bi).data() : std::span<double>{});
    }
  });
}

Var relu(Var x) {
  const Tensor& v = x.value();
  Tensor out(v.shape());
  std::uint64_t pattern = 0xC2B2AE3D27D4EB4Full;
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const bool on = v[i] > 0.0;
    out[i] = on ? v[i] : 0.0;
    word = (word << 1) | static_cast<std::uint64_t>(on);
    if (i % 64 == 63) {
      pattern = splitmix64(pattern ^ word);
      word = 0;
    }
  }
  pattern = splitmix64(pattern ^ word ^ v.size());
  x.tape().mix_relu_pattern(pattern);
  const std::size_t xi = x.id();
  const Var parents[] = {x};
  return x.tape().record(std::move(out), parents, [xi](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& in = t.value(xi);
    Tensor& dx = t.grad_buffer(xi);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (in[i] > 0.0) dx[i] += g[i];
  });
}

Var add(Var a, Var b) {
  same_shape(a, b, "add");
  const std::size_t ai = a.id(), bi = b.id();
  const Var parents[] = {a, b};
  return a.tape().record(a.value() + b.value(), parents, [ai, bi](Tape& t, std::size_t self) {
    t.accumulate(ai, t.grad(self));
    t.accumulate(bi, t.grad(self));
  });
}

Var sub(Var a, Var b) {
  same_shape(a, b, "sub");
  const std::size_t ai = a.id(), bi = b.id();
  const Var parents[] = {a, b};
  return a.tape().record(a.value() - b.value(), parents, [ai, bi](Tape& t, std::size_t self) {
    t.accumulate(ai, t.grad(self));
    if (t.requires_grad(bi)) axpy(-1.0, t.grad(self), t.grad_buffer(bi));
  });
}

Var mul(Var a, Var b) {
  same_shape(a, b, "mul");
  const std::size_t ai = a.id(), bi = b.id();
  const Var parents[] = {a, b};
  return a.tape().record(hadamard(a.value(), b.value()), parents, [ai, bi](Tape& t, std::size_t self) {
    if (t.requires_grad(ai)) t.grad_buffer(ai) += hadamard(t.grad(self), t.value(bi));
    if (t.requires_grad(bi)) t.grad_buffer(bi) += hadamard(t.grad(self), t.value(ai));
  });
}

Var scale(double s, Var a) {
  const std::size_t ai = a.id();
  const Var parents[] = {a};
  return a.tape().record(s * a.value(), parents,
                         [s, ai](Tape& t, std::size_t self) { axpy(s, t.grad(self), t.grad_buffer(ai)); });
}

Var mul_const(Var a, const Tensor& c) {
  require_same_shape(a.value(), c, "mul_const");
  const std::size_t ai = a.id();
  const Var parents[] = {a};
  return a.tape().record(hadamard(a.value(), c), parents,
                         [c, ai](Tape& t, std::size_t self) { t.grad_buffer(ai) += hadamard(t.grad(self), c); });
}

Var sub_const(Var a, const Tensor& c) {
  require_same_shape(a.value(), c, "sub_const");
  const std::size_t ai = a.id();
  const Var parents[] = {a};
  return a.tape().record(a.value() - c, parents,
                         [ai](Tape& t, std::size_t self) { t.accumulate(ai, t.grad(self)); });
}

Var slice_batch(Var x, std::size_t start, std::size_t count) {
  const Tensor& v = x.value();
  if (v.rank() != 4 || start + count > v.extent(0) || count == 0)
    throw ParameterError("slice_batch: range [" + std::to_string(start) + ", " + std::to_string(start + count) +
                         ") outside " + shape_string(v.shape()));
  const std::size_t item = v.size() / v.extent(0);
  Shape shape = v.shape();
  shape[0] = count;
  std::vector<double> data(v.storage().begin() + static_cast<std::ptrdiff_t>(start * item),
                           v.storage().begin() + static_cast<std::ptrdiff_t>((start + count) * item));
  const std::size_t xi = x.id();
  const Var parents[] = {x};
  return x.tape().record(Tensor(std::move(shape), std::move(data)), parents,
                         [xi, start, item](Tape& t, std::size_t self) {
                           const Tensor& g = t.grad(self);
                           Tensor& dx = t.grad_buffer(xi);
                           for (std::size_t i = 0; i < g.size(); ++i) dx[start * item + i] += g[i];
                         });
}

Var concat_batch(std::span<const Var> parts) {
  if (parts.empty()) throw ParameterError("concat_batch: no inputs");
  const Shape& first = parts[0].value().shape();
  if (first.size() != 4) throw ParameterError("concat_batch: expected rank-4 values");
  Shape shape = first;
  shape[0] = 0;
  for (const Var& p : parts) {
    const Shape& s = p.value().shape();
    if (s.size() != 4 || !std::equal(s.begin() + 1, s.end(), first.begin() + 1))
      throw ParameterError("concat_batch: incompatible shape " + shape_string(s));
    shape[0] += s[0];
  }
  std::vector<double> data;
  data.reserve(shape_volume(shape));
  std::vector<std::size_t> ids;
  for (const Var& p : parts) {
    data.insert(data.end(), p.value().storage().begin(), p.value().storage().end());
    ids.push_back(p.id());
  }
  return parts[0].tape().record(Tensor(std::move(shape), std::move(data)), parts,
                                [ids](Tape& t, std::size_t self) {
                                  const Tensor& g = t.grad(self);
                                  std::size_t offset = 0;
                                  for (std::size_t id : ids) {
                                    const std::size_t n = t.value(id).size();
                                    if (t.requires_grad(id)) {
                                      Tensor& dx = t.grad_buffer(id);
                                      for (std::size_t i = 0; i < n; ++i) dx[i] += g[offset + i];
                                    }
                                    offset += n;
                                  }
                                });
}

Var weighted_sum_squares(Var x, const Tensor& w) {
  require_same_shape(x.value(), w, "weighted_sum_squares");
  const Tensor& v = x.value();
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += w[i] * v[i] * v[i];
  const std::size_t xi = x.id();
  const Var parents[] = {x};
  return x.tape().record(Tensor({1}, s), parents, [w, xi](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    const Tensor& v = t.value(xi);
    Tensor& dx = t.grad_buffer(xi);
    for (std::size_t i = 0; i < v.size(); ++i) dx[i] += 2.0 * g * w[i] * v[i];
  });
}

Var mean_squares(Var x) {
  const Tensor& v = x.value();
  if (v.empty()) throw ParameterError("mean_squares: empty value");
  const double inv = 1.0 / static_cast<double>(v.size());
  const std::size_t xi = x.id();
  const Var parents[] = {x};
  return x.tape().record(Tensor({1}, squared_norm(v) * inv), parents, [inv, xi](Tape& t, std::size_t self) {
    const double g = 2.0 * inv * t.grad(self)[0];
    axpy(g, t.value(xi), t.grad_buffer(xi));
  });
}

Var detach(Var x) { return x.tape().constant(x.value()); }

}  // namespace pld::ad
