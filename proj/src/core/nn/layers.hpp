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

// Forward/backward kernels for the layer kinds used by the four networks and
// the frozen feature extractor. Tensors are NCHW; weights are [F, C, k, k].

#include <cstdint>
#include <string_view>
#include <vector>

#include "core/tensor.hpp"

namespace posesynth::nn {

enum class Activation { LeakyRelu, Relu, Linear, Tanh, Sigmoid, Softmax };

std::string_view activation_name(Activation a);

/// Applies `act` in place. Softmax normalises over channels at every pixel.
template <typename T>
void activate(Activation act, double slope, Tensor<T>& x);

/// Turns dL/dy into dL/dz in place, where y = act(z) is `out`.
template <typename T>
void activation_backward(Activation act, double slope, const Tensor<T>& out, Tensor<T>& grad);

/// "Same" padding: output extent ceil(in / stride); the odd pixel of padding
/// goes after (bottom/right).
struct ConvGeometry {
  int in_c = 0, in_h = 0, in_w = 0;
  int out_c = 0, out_h = 0, out_w = 0;
  int kernel = 3, stride = 1;
  int pad_top = 0, pad_left = 0;

  static ConvGeometry make(int in_c, int in_h, int in_w, int out_c, int kernel, int stride);
  [[nodiscard]] int patch() const { return in_c * kernel * kernel; }
};

/// Batched convolution; `out` is resized to [N, out_c, out_h, out_w].
template <typename T>
void conv2d_forward(const ConvGeometry& g, const Tensor<T>& in, const T* weight, const T* bias, Tensor<T>& out);

/// Accumulates into grad_weight / grad_bias when non-null; writes grad_in
/// (resized to the input shape) when non-null.
template <typename T>
void conv2d_backward(const ConvGeometry& g, const Tensor<T>& in, const T* weight, const Tensor<T>& grad_out,
                     Tensor<T>* grad_in, T* grad_weight, T* grad_bias);

template <typename T>
Tensor<T> upsample2x(const Tensor<T>& in);
template <typename T>
Tensor<T> upsample2x_backward(const Tensor<T>& grad_out);

/// in: [N, K, *, *] viewed as N rows of K features; weight [U, K]; out [N, U, 1, 1].
template <typename T>
Tensor<T> dense_forward(const Tensor<T>& in, const T* weight, const T* bias, int units);
template <typename T>
void dense_backward(const Tensor<T>& in, const T* weight, int units, const Tensor<T>& grad_out, Tensor<T>* grad_in,
                    T* grad_weight, T* grad_bias);

/// 2x2 max pooling with stride 2; `argmax` receives the winning input index.
template <typename T>
Tensor<T> maxpool2x(const Tensor<T>& in, std::vector<std::uint32_t>& argmax);
template <typename T>
Tensor<T> maxpool2x_backward(const Tensor<T>& grad_out, const std::vector<std::uint32_t>& argmax,
                             const Shape& input_shape);

}  // namespace posesynth::nn
