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

// The layered generator: segment the source into part and background layers,
// move each part layer by its pose-derived similarity transform, synthesize a
// foreground (with its own mask) and a hole-filled background, and composite.
// Everything is differentiable end to end except the transforms.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <json.hpp>

#include "core/geometry.hpp"
#include "core/nn/network.hpp"
#include "core/pose.hpp"
#include "core/tensor.hpp"

namespace posesynth {

struct GeneratorConfig {
  int resolution = 256;
  double sigma_heat = 0.0;   // <= 0 selects default_sigma_heat(resolution)
  double noise_sigma = 1.0;  // background fill noise, image domain [-1, 1]
  bool desk = false;         // quarter-width networks

  [[nodiscard]] int width_divisor() const { return desk ? 4 : 1; }
  [[nodiscard]] double heat_sigma() const { return sigma_heat > 0.0 ? sigma_heat : default_sigma_heat(resolution); }
  void validate() const;

  [[nodiscard]] nlohmann::json to_json() const;
  static GeneratorConfig from_json(const nlohmann::json& j);
};

/// The three generator networks.
template <typename T>
struct GeneratorNets {
  nn::Network<T> seg;
  nn::Network<T> fg;
  nn::Network<T> bg;

  static GeneratorNets build(const GeneratorConfig& cfg, std::uint64_t seed,
                             nn::InitScheme init = nn::InitScheme::TruncatedNormal);

  template <typename U>
  [[nodiscard]] GeneratorNets<U> cast() const {
    return {seg.template cast<U>(), fg.template cast<U>(), bg.template cast<U>()};
  }

  void zero_grad() {
    seg.zero_grad();
    fg.zero_grad();
    bg.zero_grad();
  }
};

template <typename T>
struct GeneratorInput {
  Tensor<T> source_image;  // [1, 3, H, W], values in [-1, 1]
  Keypoints source_pose;
  Keypoints target_pose;
};

template <typename T>
struct GeneratorOutput {
  Tensor<T> mask_residual;  // [N, L+1, H, W] segmentation net output (pre-softmax)
  Tensor<T> masks;          // [N, L+1, H, W] normalized layer distribution
  Tensor<T> layers;         // [N, 3(L+1), H, W] masked source layers
  Tensor<T> warped;         // [N, 3L, H, W] transformed part layers
  Tensor<T> foreground;     // [N, 3, H, W]
  Tensor<T> target_mask;    // [N, 1, H, W]
  Tensor<T> background_input;  // [N, 3, H, W] noise-filled background image
  Tensor<T> background;     // [N, 3, H, W]
  Tensor<T> image;          // [N, 3, H, W] composite
  std::vector<std::vector<SimilarityTransform>> transforms;  // per sample, per part
};

/// Everything generator_backward needs from a forward pass.
template <typename T>
struct GeneratorTrace {
  typename nn::Network<T>::Trace seg, fg, bg;
  Tensor<T> source;  // [N, 3, H, W]
  Tensor<T> noise;   // [N, 3, H, W]
  GeneratorOutput<T> out;
};

// Individual stages. Batched tensors are [N, C, H, W].

/// softmax over channels of (seg_net([I_s, p_s]) + log prior). Also returns
/// the residual through `residual` when non-null.
template <typename T>
Tensor<T> segment_source(const Tensor<T>& source, const Tensor<T>& source_heatmaps, const Tensor<T>& prior,
                         const nn::Network<T>& seg_net, Tensor<T>* residual = nullptr,
                         typename nn::Network<T>::Trace* trace = nullptr);

/// Layer l = mask l (x) source for every l, as [N, 3(L+1), H, W].
template <typename T>
Tensor<T> mask_layers(const Tensor<T>& source, const Tensor<T>& masks);

/// Warps the first L layers of `layers` by the per-sample transforms.
template <typename T>
Tensor<T> warp_layers(const Tensor<T>& layers, const std::vector<std::vector<SimilarityTransform>>& transforms);

/// Returns {foreground, target mask}.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> synthesize_foreground(const Tensor<T>& warped, const Tensor<T>& target_heatmaps,
                                                      const nn::Network<T>& fg_net,
                                                      typename nn::Network<T>::Trace* trace = nullptr);

/// Replaces the foreground of the source with N(0, sigma) noise and runs the
/// background net on [filled image, background mask, p_s]. `noise_out`
/// receives the drawn noise and `filled_out` the filled image when non-null.
template <typename T>
Tensor<T> synthesize_background(const Tensor<T>& source, const Tensor<T>& masks, const Tensor<T>& source_heatmaps,
                                double sigma, const nn::Network<T>& bg_net, std::mt19937_64& rng,
                                Tensor<T>* noise_out = nullptr, Tensor<T>* filled_out = nullptr,
                                typename nn::Network<T>::Trace* trace = nullptr);

/// mask (x) fg + (1 - mask) (x) bg.
template <typename T>
Tensor<T> composite(const Tensor<T>& foreground, const Tensor<T>& background, const Tensor<T>& mask);

/// Full pipeline over a batch. Noise is drawn from `rng` in sample order.
template <typename T>
GeneratorOutput<T> generator_forward(const GeneratorNets<T>& nets, const GeneratorConfig& cfg,
                                     std::span<const GeneratorInput<T>> batch, std::mt19937_64& rng,
                                     GeneratorTrace<T>* trace = nullptr);

/// Back-propagates dL/dy into the parameter gradients of all three networks.
template <typename T>
void generator_backward(GeneratorNets<T>& nets, const GeneratorTrace<T>& trace, const Tensor<T>& grad_image);

}  // namespace posesynth
