// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#include "pld/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "pld/errors.hpp"

namespace pld {

std::size_t shape_volume(const Shape& shape) {
  std::size_t v = 1;
  for (auto e : shape) v *= e;
  return v;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_volume(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(data.begin(), data.end()) {
  if (data_.size() != shape_volume(shape_))
    throw ParameterError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_string(shape_));
}

double& Tensor::at(std::size_t c, std::size_t y, std::size_t x) {
  return data_[(c * shape_[1] + y) * shape_[2] + x];
}

double Tensor::at(std::size_t c, std::size_t y, std::size_t x) const {
  return data_[(c * shape_[1] + y) * shape_[2] + x];
}

Tensor Tensor::reshaped(Shape shape) const& {
  Tensor t = *this;
  return std::move(t).reshaped(std::move(shape));
}

Tensor Tensor::reshaped(Shape shape) && {
  if (shape_volume(shape) != data_.size())
    throw ParameterError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  shape_ = std::move(shape);
  return std::move(*this);
}

std::size_t Tensor::height() const {
  if (rank() < 2) throw ParameterError("tensor of rank < 2 has no spatial extent");
  return shape_[rank() - 2];
}

std::size_t Tensor::width() const {
  if (rank() < 2) throw ParameterError("tensor of rank < 2 has no spatial extent");
  return shape_[rank() - 1];
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape())
    throw ParameterError(std::string(what) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
}

Tensor operator+(const Tensor& a, const Tensor& b) {
  Tensor r = a;
  r += b;
  return r;
}

Tensor operator-(const Tensor& a, const Tensor& b) {
  Tensor r = a;
  r -= b;
  return r;
}

Tensor operator*(double s, const Tensor& a) {
  Tensor r = a;
  r *= s;
  return r;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "hadamard");
  Tensor r = a;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] *= b[i];
  return r;
}

Tensor& operator+=(Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

Tensor& operator-=(Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "subtract");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
  return a;
}

Tensor& operator*=(Tensor& a, double s) {
  for (auto& v : a.data()) v *= s;
  return a;
}

void axpy(double s, const Tensor& b, Tensor& a) {
  require_same_shape(a, b, "axpy");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += s * b[i];
}

double dot(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double sum(const Tensor& a) {
  double acc = 0.0;
  for (double v : a.data()) acc += v;
  return acc;
}

double mean(const Tensor& a) {
  if (a.empty()) throw ParameterError("mean of empty tensor");
  return sum(a) / static_cast<double>(a.size());
}

double squared_norm(const Tensor& a) {
  double acc = 0.0;
  for (double v : a.data()) acc += v * v;
  return acc;
}

double min_value(const Tensor& a) {
  if (a.empty()) throw ParameterError("min of empty tensor");
  return *std::min_element(a.data().begin(), a.data().end());
}

double max_value(const Tensor& a) {
  if (a.empty()) throw ParameterError("max of empty tensor");
  return *std::max_element(a.data().begin(), a.data().end());
}

Tensor map(const Tensor& a, const std::function<double(double)>& f) {
  Tensor r = a;
  for (auto& v : r.data()) v = f(v);
  return r;
}

Tensor batch_item(const Tensor& batch, std::size_t index) {
  if (batch.rank() != 4) throw ParameterError("batch_item expects a rank-4 tensor");
  const auto& s = batch.shape();
  if (index >= s[0]) throw ParameterError("batch index out of range");
  const std::size_t n = s[1] * s[2] * s[3];
  std::vector<double> d(batch.data().begin() + static_cast<std::ptrdiff_t>(index * n),
                        batch.data().begin() + static_cast<std::ptrdiff_t>((index + 1) * n));
  return Tensor({s[1], s[2], s[3]}, std::move(d));
}

void set_batch_item(Tensor& batch, std::size_t index, const Tensor& item) {
  const auto& s = batch.shape();
  if (batch.rank() != 4 || item.shape() != Shape{s[1], s[2], s[3]} || index >= s[0])
    throw ParameterError("set_batch_item: incompatible item " + shape_string(item.shape()) + " for batch " +
                         shape_string(s));
  std::copy(item.data().begin(), item.data().end(),
            batch.data().begin() + static_cast<std::ptrdiff_t>(index * item.size()));
}

Tensor stack(std::span<const Tensor> items) {
  if (items.empty()) throw ParameterError("cannot stack an empty list");
  const Shape& s = items.front().shape();
  if (s.size() != 3) throw ParameterError("stack expects rank-3 items");
  Tensor batch({items.size(), s[0], s[1], s[2]});
  for (std::size_t i = 0; i < items.size(); ++i) set_batch_item(batch, i, items[i]);
  return batch;
}

Tensor stack_batches(std::span<const Tensor> batches) {
  if (batches.empty()) throw ParameterError("cannot concatenate an empty list");
  const Shape& first = batches.front().shape();
  if (first.size() != 4) throw ParameterError("stack_batches expects rank-4 batches");
  Shape shape = first;
  shape[0] = 0;
  std::vector<double> data;
  for (const auto& b : batches) {
    if (b.rank() != 4 || !std::equal(first.begin() + 1, first.end(), b.shape().begin() + 1))
      throw ParameterError("stack_batches: incompatible shape " + shape_string(b.shape()));
    shape[0] += b.extent(0);
    data.insert(data.end(), b.storage().begin(), b.storage().end());
  }
  return Tensor(std::move(shape), std::move(data));
}

void flip_horizontal(Tensor& t) {
  const std::size_t w = t.width();
  const std::size_t rows = t.size() / w;
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = t.data().subspan(r * w, w);
    std::reverse(row.begin(), row.end());
  }
}

void flip_vertical(Tensor& t) {
  const std::size_t w = t.width();
  const std::size_t h = t.height();
  const std::size_t planes = t.size() / (w * h);
  for (std::size_t p = 0; p < planes; ++p) {
    double* base = t.data().data() + p * w * h;
    for (std::size_t y = 0; y < h / 2; ++y)
      std::swap_ranges(base + y * w, base + (y + 1) * w, base + (h - 1 - y) * w);
  }
}

Tensor crop(const Tensor& t, std::size_t top, std::size_t left, std::size_t height, std::size_t width) {
  if (t.rank() != 3) throw ParameterError("crop expects a rank-3 tensor");
  if (top + height > t.height() || left + width > t.width())
    throw ParameterError("crop window exceeds image bounds");
  Tensor r({t.extent(0), height, width});
  for (std::size_t c = 0; c < t.extent(0); ++c)
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t x = 0; x < width; ++x) r.at(c, y, x) = t.at(c, top + y, left + x);
  return r;
}

}  // namespace pld
