/*
 * Copyright 2026 The posesynth Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <new>
#include <span>
#include <string>
#include <vector>

#include "core/error.hpp"

namespace posesynth {

/// Allocator with a fixed 64-byte alignment. Vectorised reductions peel a
/// scalar head whose length depends on the address, so buffers must sit at
/// the same alignment on every run for results to be bit-reproducible.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlignment{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlignment)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlignment); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

template <typename T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

/// Dense NCHW shape. Images are stored planar (one H*W plane per channel).
struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  [[nodiscard]] std::size_t size() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  [[nodiscard]] std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  [[nodiscard]] std::size_t sample() const { return plane() * c; }
  bool operator==(const Shape&) const = default;

  [[nodiscard]] std::string str() const {
    return "[" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
           std::to_string(w) + "]";
  }
};

template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0)) : shape_(shape), data_(shape.size(), fill) {
    if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0)
      throw InvalidInput("negative tensor extent " + shape.str());
  }
  Tensor(int n, int c, int h, int w, T fill = T(0)) : Tensor(Shape{n, c, h, w}, fill) {}

  [[nodiscard]] const Shape& shape() const { return shape_; }
  [[nodiscard]] int n() const { return shape_.n; }
  [[nodiscard]] int c() const { return shape_.c; }
  [[nodiscard]] int h() const { return shape_.h; }
  [[nodiscard]] int w() const { return shape_.w; }
  [[nodiscard]] std::size_t size() const { return data_.size(); }
  [[nodiscard]] bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> span() { return data_; }
  std::span<const T> span() const { return data_; }
  AlignedVector<T>& vec() { return data_; }
  const AlignedVector<T>& vec() const { return data_; }

  T& at(int n, int c, int y, int x) { return data_[index(n, c, y, x)]; }
  const T& at(int n, int c, int y, int x) const { return data_[index(n, c, y, x)]; }

  T* plane(int n, int c) { return data_.data() + (static_cast<std::size_t>(n) * shape_.c + c) * shape_.plane(); }
  const T* plane(int n, int c) const {
    return data_.data() + (static_cast<std::size_t>(n) * shape_.c + c) * shape_.plane();
  }
  T* sample(int n) { return data_.data() + static_cast<std::size_t>(n) * shape_.sample(); }
  const T* sample(int n) const { return data_.data() + static_cast<std::size_t>(n) * shape_.sample(); }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  template <typename U>
  [[nodiscard]] Tensor<U> cast() const {
    Tensor<U> out(shape_);
    std::transform(data_.begin(), data_.end(), out.data(), [](T v) { return static_cast<U>(v); });
    return out;
  }

  bool operator==(const Tensor&) const = default;

 private:
  [[nodiscard]] std::size_t index(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }

  Shape shape_{};
  AlignedVector<T> data_;
};

/// Concatenates along the channel axis; all parts must share n, h, w.
template <typename T>
Tensor<T> concat_channels(std::initializer_list<const Tensor<T>*> parts) {
  if (parts.size() == 0) throw InvalidInput("concat_channels: no inputs");
  const Shape first = (*parts.begin())->shape();
  int channels = 0;
  for (const auto* p : parts) {
    const Shape& s = p->shape();
    if (s.n != first.n || s.h != first.h || s.w != first.w)
      throw InvalidInput("concat_channels: shape mismatch " + s.str() + " vs " + first.str());
    channels += s.c;
  }
  Tensor<T> out(first.n, channels, first.h, first.w);
  for (int n = 0; n < first.n; ++n) {
    T* dst = out.sample(n);
    for (const auto* p : parts) {
      const std::size_t len = p->shape().sample();
      std::copy_n(p->sample(n), len, dst);
      dst += len;
    }
  }
  return out;
}

/// Copies channels [first, first + count) of every sample.
template <typename T>
Tensor<T> slice_channels(const Tensor<T>& t, int first, int count) {
  if (first < 0 || count < 0 || first + count > t.c())
    throw InvalidInput("slice_channels: range out of bounds");
  Tensor<T> out(t.n(), count, t.h(), t.w());
  const std::size_t len = t.shape().plane() * count;
  for (int n = 0; n < t.n(); ++n) std::copy_n(t.plane(n, first), len, out.sample(n));
  return out;
}

/// Adds `src` into channels [first, first + src.c()) of `dst`.
template <typename T>
void accumulate_channels(Tensor<T>& dst, const Tensor<T>& src, int first) {
  if (src.n() != dst.n() || src.h() != dst.h() || src.w() != dst.w() || first + src.c() > dst.c())
    throw InvalidInput("accumulate_channels: shape mismatch");
  const std::size_t len = src.shape().sample();
  for (int n = 0; n < src.n(); ++n) {
    T* d = dst.plane(n, first);
    const T* s = src.sample(n);
    for (std::size_t i = 0; i < len; ++i) d[i] += s[i];
  }
}

/// Extracts sample `n` as a batch of one.
template <typename T>
Tensor<T> take_sample(const Tensor<T>& t, int n) {
  Tensor<T> out(1, t.c(), t.h(), t.w());
  std::copy_n(t.sample(n), t.shape().sample(), out.data());
  return out;
}

/// Stacks equally shaped single-sample tensors into one batch.
template <typename T>
Tensor<T> stack_samples(std::span<const Tensor<T>> items) {
  if (items.empty()) throw InvalidInput("stack_samples: empty");
  const Shape s = items.front().shape();
  Tensor<T> out(static_cast<int>(items.size()) * s.n, s.c, s.h, s.w);
  T* dst = out.data();
  for (const auto& it : items) {
    if (it.c() != s.c || it.h() != s.h || it.w() != s.w)
      throw InvalidInput("stack_samples: shape mismatch");
    dst = std::copy(it.data(), it.data() + it.size(), dst);
  }
  return out;
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
  if (a.shape() != b.shape())
    throw InvalidInput(std::string(what) + ": shape mismatch " + a.shape().str() + " vs " + b.shape().str());
}

}  // namespace posesynth
