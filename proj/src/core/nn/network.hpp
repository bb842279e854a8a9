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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "core/nn/spec.hpp"
#include "core/tensor.hpp"

namespace posesynth::nn {

template <typename T>
struct Parameter {
  std::string name;
  std::vector<int> dims;
  AlignedVector<T> value;
  AlignedVector<T> grad;
};

enum class InitScheme {
  TruncatedNormal,  // std 0.02, cut at two standard deviations; zero biases
  HeNormal,         // std sqrt(2 / fan_in); zero biases
};

/// A built network: parameters plus a compiled op list. forward() is const and
/// may be called concurrently; backward() accumulates into parameter grads and
/// needs exclusive access.
template <typename T>
class Network {
 public:
  /// Activations retained by forward() for a later backward().
  struct Trace {
    Tensor<T> input;
    std::vector<Tensor<T>> outputs;
    std::vector<Tensor<T>> heads;
  };

  /// `height`/`width` fix dense-layer sizes; fully convolutional networks
  /// accept any size divisible by 2^downsample_depth.
  Network(NetSpec spec, int height, int width, std::uint64_t seed, InitScheme init = InitScheme::TruncatedNormal);

  [[nodiscard]] const NetSpec& spec() const { return spec_; }
  [[nodiscard]] int nominal_height() const { return height_; }
  [[nodiscard]] int nominal_width() const { return width_; }

  std::vector<Tensor<T>> forward(const Tensor<T>& input, Trace* trace = nullptr) const;

  /// One gradient per head (an empty tensor means zero). Returns dL/dinput
  /// when `need_input_grad`, else an empty tensor.
  Tensor<T> backward(const Trace& trace, std::span<const Tensor<T>> head_grads, bool need_input_grad = true);

  void zero_grad();
  std::vector<Parameter<T>>& parameters() { return params_; }
  const std::vector<Parameter<T>>& parameters() const { return params_; }
  [[nodiscard]] std::size_t parameter_count() const;

  /// Same spec and parameter values at another precision.
  template <typename U>
  [[nodiscard]] Network<U> cast() const {
    Network<U> out(spec_, height_, width_, 0);
    for (std::size_t i = 0; i < params_.size(); ++i)
      for (std::size_t j = 0; j < params_[i].value.size(); ++j)
        out.parameters()[i].value[j] = static_cast<U>(params_[i].value[j]);
    return out;
  }

 private:
  enum class OpKind { Conv, Upsample, Concat, Flatten, Dense };
  struct Op {
    OpKind kind;
    int filters = 0, kernel = 0, stride = 1;
    Activation act = Activation::Linear;
    int param = -1;  // weight index; bias is param + 1
    int skip = -1;   // Concat: op whose output is appended
  };

  void compile();
  void add_params(const std::string& prefix, const LayerSpec& l, int in_c, int in_features);
  Tensor<T> run_op(const Op& op, const Tensor<T>& x, const std::vector<Tensor<T>>& outputs) const;
  void backward_op(const Op& op, const Tensor<T>& in, const Tensor<T>& out, Tensor<T> grad, Tensor<T>* grad_in,
                   std::vector<Tensor<T>>& grads);

  NetSpec spec_;
  int height_ = 0, width_ = 0;
  std::vector<Op> ops_;
  std::vector<Op> heads_;
  std::vector<Parameter<T>> params_;
};

extern template class Network<float>;
extern template class Network<double>;

}  // namespace posesynth::nn
