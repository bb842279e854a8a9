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
#include "core/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Core>

namespace posesynth::nn {

std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::LeakyRelu: return "leaky_relu";
    case Activation::Relu: return "relu";
    case Activation::Linear: return "linear";
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Softmax: return "softmax";
  }
  return "?";
}

template <typename T>
void activate(Activation act, double slope, Tensor<T>& x) {
  T* d = x.data();
  const std::size_t n = x.size();
  const T s = static_cast<T>(slope);
  switch (act) {
    case Activation::Linear: return;
    case Activation::LeakyRelu:
      for (std::size_t i = 0; i < n; ++i) d[i] = d[i] > T(0) ? d[i] : d[i] * s;
      return;
    case Activation::Relu:
      for (std::size_t i = 0; i < n; ++i) d[i] = std::max(d[i], T(0));
      return;
    case Activation::Tanh:
      for (std::size_t i = 0; i < n; ++i) d[i] = std::tanh(d[i]);
      return;
    case Activation::Sigmoid:
      for (std::size_t i = 0; i < n; ++i) d[i] = T(1) / (T(1) + std::exp(-d[i]));
      return;
    case Activation::Softmax: {
      const std::size_t plane = x.shape().plane();
      for (int b = 0; b < x.n(); ++b) {
        T* base = x.sample(b);
        for (std::size_t p = 0; p < plane; ++p) {
          T m = -std::numeric_limits<T>::infinity();
          for (int c = 0; c < x.c(); ++c) m = std::max(m, base[c * plane + p]);
          T sum = T(0);
          for (int c = 0; c < x.c(); ++c) {
            T& v = base[c * plane + p];
            v = std::exp(v - m);
            sum += v;
          }
          for (int c = 0; c < x.c(); ++c) base[c * plane + p] /= sum;
        }
      }
      return;
    }
  }
}

template <typename T>
void activation_backward(Activation act, double slope, const Tensor<T>& out, Tensor<T>& grad) {
  require_same_shape(out, grad, "activation_backward");
  const T* y = out.data();
  T* g = grad.data();
  const std::size_t n = out.size();
  const T s = static_cast<T>(slope);
  switch (act) {
    case Activation::Linear: return;
    case Activation::LeakyRelu:
      for (std::size_t i = 0; i < n; ++i) g[i] *= y[i] > T(0) ? T(1) : s;
      return;
    case Activation::Relu:
      for (std::size_t i = 0; i < n; ++i) g[i] *= y[i] > T(0) ? T(1) : T(0);
      return;
    case Activation::Tanh:
      for (std::size_t i = 0; i < n; ++i) g[i] *= T(1) - y[i] * y[i];
      return;
    case Activation::Sigmoid:
      for (std::size_t i = 0; i < n; ++i) g[i] *= y[i] * (T(1) - y[i]);
      return;
    case Activation::Softmax: {
      const std::size_t plane = out.shape().plane();
      for (int b = 0; b < out.n(); ++b) {
        const T* yb = out.sample(b);
        T* gb = grad.sample(b);
        for (std::size_t p = 0; p < plane; ++p) {
          T dot = T(0);
          for (int c = 0; c < out.c(); ++c) dot += yb[c * plane + p] * gb[c * plane + p];
          for (int c = 0; c < out.c(); ++c) gb[c * plane + p] = yb[c * plane + p] * (gb[c * plane + p] - dot);
        }
      }
      return;
    }
  }
}

ConvGeometry ConvGeometry::make(int in_c, int in_h, int in_w, int out_c, int kernel, int stride) {
  if (in_h <= 0 || in_w <= 0 || in_c <= 0 || out_c <= 0 || kernel <= 0 || stride <= 0)
    throw InvalidInput("conv geometry: non-positive extent");
  ConvGeometry g;
  g.in_c = in_c;
  g.in_h = in_h;
  g.in_w = in_w;
  g.out_c = out_c;
  g.kernel = kernel;
  g.stride = stride;
  g.out_h = (in_h + stride - 1) / stride;
  g.out_w = (in_w + stride - 1) / stride;
  const int pad_h = std::max((g.out_h - 1) * stride + kernel - in_h, 0);
  const int pad_w = std::max((g.out_w - 1) * stride + kernel - in_w, 0);
  g.pad_top = pad_h / 2;
  g.pad_left = pad_w / 2;
  return g;
}

namespace {

template <typename T>
using MatMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>>;
template <typename T>
using ConstMatMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>>;

// Output rows per im2col block, bounding scratch at roughly 4M elements.
int rows_per_block(const ConvGeometry& g) {
  const std::size_t per_row = static_cast<std::size_t>(g.out_w) * g.patch();
  const std::size_t budget = std::size_t{1} << 22;
  return static_cast<int>(std::clamp<std::size_t>(budget / std::max<std::size_t>(per_row, 1), 1, g.out_h));
}

// cols is (rows*out_w) x patch, column-major: one contiguous plane per (c, ky, kx).
template <typename T>
void im2col(const ConvGeometry& g, const T* in, int row0, int rows, T* cols) {
  const std::size_t p_count = static_cast<std::size_t>(rows) * g.out_w;
  const int k = g.kernel;
  for (int c = 0; c < g.in_c; ++c) {
    const T* ch = in + static_cast<std::size_t>(c) * g.in_h * g.in_w;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        T* dst = cols + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * p_count;
        for (int oy = row0; oy < row0 + rows; ++oy) {
          const int iy = oy * g.stride - g.pad_top + ky;
          T* drow = dst + static_cast<std::size_t>(oy - row0) * g.out_w;
          if (iy < 0 || iy >= g.in_h) {
            std::fill_n(drow, g.out_w, T(0));
            continue;
          }
          const T* srow = ch + static_cast<std::size_t>(iy) * g.in_w;
          if (g.stride == 1) {
            const int shift = kx - g.pad_left;
            const int lo = std::min(std::max(0, -shift), g.out_w);
            const int hi = std::max(lo, std::min(g.out_w, g.in_w - shift));
            std::fill(drow, drow + lo, T(0));
            std::copy(srow + lo + shift, srow + hi + shift, drow + lo);
            std::fill(drow + hi, drow + g.out_w, T(0));
          } else {
            for (int ox = 0; ox < g.out_w; ++ox) {
              const int ix = ox * g.stride - g.pad_left + kx;
              drow[ox] = (ix >= 0 && ix < g.in_w) ? srow[ix] : T(0);
            }
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const ConvGeometry& g, const T* cols, int row0, int rows, T* in_grad) {
  const std::size_t p_count = static_cast<std::size_t>(rows) * g.out_w;
  const int k = g.kernel;
  for (int c = 0; c < g.in_c; ++c) {
    T* ch = in_grad + static_cast<std::size_t>(c) * g.in_h * g.in_w;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const T* src = cols + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * p_count;
        for (int oy = row0; oy < row0 + rows; ++oy) {
          const int iy = oy * g.stride - g.pad_top + ky;
          if (iy < 0 || iy >= g.in_h) continue;
          const T* srow = src + static_cast<std::size_t>(oy - row0) * g.out_w;
          T* drow = ch + static_cast<std::size_t>(iy) * g.in_w;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride - g.pad_left + kx;
            if (ix >= 0 && ix < g.in_w) drow[ix] += srow[ox];
          }
        }
      }
    }
  }
}

template <typename T>
AlignedVector<T>& scratch_buffer(std::size_t n) {
  thread_local AlignedVector<T> buf;
  if (buf.size() < n) buf.resize(n);
  return buf;
}

}  // namespace

template <typename T>
void conv2d_forward(const ConvGeometry& g, const Tensor<T>& in, const T* weight, const T* bias, Tensor<T>& out) {
  if (in.c() != g.in_c || in.h() != g.in_h || in.w() != g.in_w)
    throw InvalidInput("conv2d: input " + in.shape().str() + " does not match layer geometry");
  const int n = in.n();
  out = Tensor<T>(n, g.out_c, g.out_h, g.out_w);
  const int block = rows_per_block(g);
  const int R = g.patch();
  const std::size_t P = static_cast<std::size_t>(g.out_h) * g.out_w;
  auto& cols = scratch_buffer<T>(static_cast<std::size_t>(block) * g.out_w * R);
  ConstMatMap<T> wt(weight, R, g.out_c);

  for (int b = 0; b < n; ++b) {
    MatMap<T> o(out.sample(b), static_cast<Eigen::Index>(P), g.out_c);
    for (int row0 = 0; row0 < g.out_h; row0 += block) {
      const int rows = std::min(block, g.out_h - row0);
      const Eigen::Index bp = static_cast<Eigen::Index>(rows) * g.out_w;
      im2col(g, in.sample(b), row0, rows, cols.data());
      ConstMatMap<T> c(cols.data(), bp, R);
      o.middleRows(static_cast<Eigen::Index>(row0) * g.out_w, bp).noalias() = c * wt;
    }
    if (bias != nullptr)
      o.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(bias, g.out_c);
  }
}

template <typename T>
void conv2d_backward(const ConvGeometry& g, const Tensor<T>& in, const T* weight, const Tensor<T>& grad_out,
                     Tensor<T>* grad_in, T* grad_weight, T* grad_bias) {
  const int n = in.n();
  if (grad_out.n() != n || grad_out.c() != g.out_c || grad_out.h() != g.out_h || grad_out.w() != g.out_w)
    throw InvalidInput("conv2d_backward: gradient shape mismatch");
  const int block = rows_per_block(g);
  const int R = g.patch();
  const std::size_t P = static_cast<std::size_t>(g.out_h) * g.out_w;
  auto& cols = scratch_buffer<T>(static_cast<std::size_t>(block) * g.out_w * R);
  ConstMatMap<T> wt(weight, R, g.out_c);
  if (grad_in != nullptr) *grad_in = Tensor<T>(in.shape());

  for (int b = 0; b < n; ++b) {
    ConstMatMap<T> go(grad_out.sample(b), static_cast<Eigen::Index>(P), g.out_c);
    if (grad_bias != nullptr) {
      Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> gb(grad_bias, g.out_c);
      gb += go.colwise().sum();
    }
    for (int row0 = 0; row0 < g.out_h; row0 += block) {
      const int rows = std::min(block, g.out_h - row0);
      const Eigen::Index bp = static_cast<Eigen::Index>(rows) * g.out_w;
      const auto go_block = go.middleRows(static_cast<Eigen::Index>(row0) * g.out_w, bp);
      if (grad_weight != nullptr) {
        im2col(g, in.sample(b), row0, rows, cols.data());
        ConstMatMap<T> c(cols.data(), bp, R);
        MatMap<T> gw(grad_weight, R, g.out_c);
        gw.noalias() += c.transpose() * go_block;
      }
      if (grad_in != nullptr) {
        MatMap<T> c(cols.data(), bp, R);
        c.noalias() = go_block * wt.transpose();
        col2im(g, cols.data(), row0, rows, grad_in->sample(b));
      }
    }
  }
}

template <typename T>
Tensor<T> upsample2x(const Tensor<T>& in) {
  Tensor<T> out(in.n(), in.c(), in.h() * 2, in.w() * 2);
  const int w2 = in.w() * 2;
  for (int b = 0; b < in.n(); ++b)
    for (int c = 0; c < in.c(); ++c) {
      const T* src = in.plane(b, c);
      T* dst = out.plane(b, c);
      for (int y = 0; y < in.h(); ++y) {
        T* r0 = dst + static_cast<std::size_t>(2 * y) * w2;
        T* r1 = r0 + w2;
        for (int x = 0; x < in.w(); ++x) {
          const T v = src[y * in.w() + x];
          r0[2 * x] = r0[2 * x + 1] = r1[2 * x] = r1[2 * x + 1] = v;
        }
      }
    }
  return out;
}

template <typename T>
Tensor<T> upsample2x_backward(const Tensor<T>& grad_out) {
  if (grad_out.h() % 2 != 0 || grad_out.w() % 2 != 0) throw InvalidInput("upsample2x_backward: odd extent");
  Tensor<T> g(grad_out.n(), grad_out.c(), grad_out.h() / 2, grad_out.w() / 2);
  const int w2 = grad_out.w();
  for (int b = 0; b < g.n(); ++b)
    for (int c = 0; c < g.c(); ++c) {
      const T* src = grad_out.plane(b, c);
      T* dst = g.plane(b, c);
      for (int y = 0; y < g.h(); ++y) {
        const T* r0 = src + static_cast<std::size_t>(2 * y) * w2;
        const T* r1 = r0 + w2;
        for (int x = 0; x < g.w(); ++x)
          dst[y * g.w() + x] = (r0[2 * x] + r0[2 * x + 1]) + (r1[2 * x] + r1[2 * x + 1]);
      }
    }
  return g;
}

template <typename T>
Tensor<T> dense_forward(const Tensor<T>& in, const T* weight, const T* bias, int units) {
  const Eigen::Index k = static_cast<Eigen::Index>(in.shape().sample());
  Tensor<T> out(in.n(), units, 1, 1);
  ConstMatMap<T> x(in.data(), k, in.n());
  ConstMatMap<T> wt(weight, k, units);  // row-major [U, K] == column-major K x U
  MatMap<T> o(out.data(), units, in.n());
  o.noalias() = wt.transpose() * x;
  if (bias != nullptr) o.colwise() += Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>(bias, units);
  return out;
}

template <typename T>
void dense_backward(const Tensor<T>& in, const T* weight, int units, const Tensor<T>& grad_out, Tensor<T>* grad_in,
                    T* grad_weight, T* grad_bias) {
  const Eigen::Index k = static_cast<Eigen::Index>(in.shape().sample());
  if (grad_out.n() != in.n() || grad_out.shape().sample() != static_cast<std::size_t>(units))
    throw InvalidInput("dense_backward: gradient shape mismatch");
  ConstMatMap<T> x(in.data(), k, in.n());
  ConstMatMap<T> go(grad_out.data(), units, in.n());
  ConstMatMap<T> wt(weight, k, units);
  if (grad_weight != nullptr) {
    MatMap<T> gw(grad_weight, k, units);
    gw.noalias() += x * go.transpose();
  }
  if (grad_bias != nullptr) {
    Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> gb(grad_bias, units);
    gb += go.rowwise().sum();
  }
  if (grad_in != nullptr) {
    *grad_in = Tensor<T>(in.shape());
    MatMap<T> gi(grad_in->data(), k, in.n());
    gi.noalias() = wt * go;
  }
}

template <typename T>
Tensor<T> maxpool2x(const Tensor<T>& in, std::vector<std::uint32_t>& argmax) {
  const int oh = in.h() / 2, ow = in.w() / 2;
  Tensor<T> out(in.n(), in.c(), oh, ow);
  argmax.assign(out.size(), 0);
  std::size_t o = 0;
  for (int b = 0; b < in.n(); ++b)
    for (int c = 0; c < in.c(); ++c) {
      const T* src = in.plane(b, c);
      const std::uint32_t base = static_cast<std::uint32_t>(src - in.data());
      T* dst = out.plane(b, c);
      for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x, ++o) {
          std::uint32_t best = static_cast<std::uint32_t>((2 * y) * in.w() + 2 * x);
          const std::uint32_t cand[3] = {best + 1, best + static_cast<std::uint32_t>(in.w()),
                                         best + static_cast<std::uint32_t>(in.w()) + 1};
          for (std::uint32_t q : cand)
            if (src[q] > src[best]) best = q;
          dst[y * ow + x] = src[best];
          argmax[o] = base + best;
        }
    }
  return out;
}

template <typename T>
Tensor<T> maxpool2x_backward(const Tensor<T>& grad_out, const std::vector<std::uint32_t>& argmax,
                             const Shape& input_shape) {
  if (argmax.size() != grad_out.size()) throw InvalidInput("maxpool2x_backward: stale argmax");
  Tensor<T> g(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) g.data()[argmax[i]] += grad_out.data()[i];
  return g;
}

#define POSESYNTH_INSTANTIATE_LAYERS(T)                                                                    \
  template void activate<T>(Activation, double, Tensor<T>&);                                               \
  template void activation_backward<T>(Activation, double, const Tensor<T>&, Tensor<T>&);                   \
  template void conv2d_forward<T>(const ConvGeometry&, const Tensor<T>&, const T*, const T*, Tensor<T>&);   \
  template void conv2d_backward<T>(const ConvGeometry&, const Tensor<T>&, const T*, const Tensor<T>&,       \
                                   Tensor<T>*, T*, T*);                                                    \
  template Tensor<T> upsample2x<T>(const Tensor<T>&);                                                      \
  template Tensor<T> upsample2x_backward<T>(const Tensor<T>&);                                             \
  template Tensor<T> dense_forward<T>(const Tensor<T>&, const T*, const T*, int);                          \
  template void dense_backward<T>(const Tensor<T>&, const T*, int, const Tensor<T>&, Tensor<T>*, T*, T*);   \
  template Tensor<T> maxpool2x<T>(const Tensor<T>&, std::vector<std::uint32_t>&);                           \
  template Tensor<T> maxpool2x_backward<T>(const Tensor<T>&, const std::vector<std::uint32_t>&, const Shape&);

POSESYNTH_INSTANTIATE_LAYERS(float)
POSESYNTH_INSTANTIATE_LAYERS(double)

#undef POSESYNTH_INSTANTIATE_LAYERS

}  // namespace posesynth::nn
