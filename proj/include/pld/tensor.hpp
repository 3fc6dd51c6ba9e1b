// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace pld {

using Shape = std::vector<std::size_t>;

/// 64-byte aligned allocations. Vectorized kernels peel unaligned heads at run
/// time, so a fixed alignment keeps their summation order, and therefore the
/// results, identical from run to run.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t alignment{64};

  AlignedAllocator() noexcept = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), alignment)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, alignment); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

using TensorStorage = std::vector<double, AlignedAllocator<double>>;

std::size_t shape_volume(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles. Images are rank 3 (channels, height,
/// width); batches are rank 4 (batch, channels, height, width).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor image(std::size_t height, std::size_t width, double fill = 0.0) {
    return Tensor({1, height, width}, fill);
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  TensorStorage& storage() noexcept { return data_; }
  const TensorStorage& storage() const noexcept { return data_; }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  /// Element access for rank-3 tensors.
  double& at(std::size_t c, std::size_t y, std::size_t x);
  double at(std::size_t c, std::size_t y, std::size_t x) const;

  /// Reinterprets the same data with a different shape of equal volume.
  Tensor reshaped(Shape shape) const&;
  Tensor reshaped(Shape shape) &&;

  /// Height and width of the trailing two axes.
  std::size_t height() const;
  std::size_t width() const;

  bool all_finite() const noexcept;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  TensorStorage data_;
};

void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(double s, const Tensor& a);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor& operator+=(Tensor& a, const Tensor& b);
Tensor& operator-=(Tensor& a, const Tensor& b);
Tensor& operator*=(Tensor& a, double s);

/// a += s * b
void axpy(double s, const Tensor& b, Tensor& a);

double dot(const Tensor& a, const Tensor& b);
double sum(const Tensor& a);
double mean(const Tensor& a);
double squared_norm(const Tensor& a);
double min_value(const Tensor& a);
double max_value(const Tensor& a);

Tensor map(const Tensor& a, const std::function<double(double)>& f);

/// Sample `index` of a rank-4 batch as a rank-3 tensor.
Tensor batch_item(const Tensor& batch, std::size_t index);
void set_batch_item(Tensor& batch, std::size_t index, const Tensor& item);
/// Stacks equally shaped rank-3 tensors into a rank-4 batch.
Tensor stack(std::span<const Tensor> items);
/// Concatenates rank-4 batches with equal trailing shape along axis 0.
Tensor stack_batches(std::span<const Tensor> batches);

/// Flips the trailing two axes in place.
void flip_horizontal(Tensor& t);
void flip_vertical(Tensor& t);

/// Rank-3 crop of the trailing spatial axes.
Tensor crop(const Tensor& t, std::size_t top, std::size_t left, std::size_t height,
            std::size_t width);

}  // namespace pld
