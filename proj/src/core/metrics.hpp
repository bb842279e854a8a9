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

#include <array>
#include <span>
#include <vector>

#include "core/tensor.hpp"

namespace posesynth {

/// [-1, 1] -> [0, 1].
Tensor<double> to_unit(const Tensor<float>& image);

/// Mean absolute difference.
double metric_l1(const Tensor<double>& a, const Tensor<double>& b);

/// Mean SSIM over all valid 11x11 windows (Gaussian weights, sigma 1.5),
/// K1 = 0.01, K2 = 0.03, dynamic range 1, per channel and then averaged.
/// Inputs are [1, C, H, W] on [0, 1] with H, W >= 11.
double metric_ssim(const Tensor<double>& a, const Tensor<double>& b);

/// Per-pixel luminance gradient magnitude: central differences in the
/// interior, zero on the one-pixel border.
std::vector<double> gradient_magnitudes(const Tensor<double>& image);

/// Fraction of `images` gradient magnitudes falling in each ground-truth
/// quartile bin. Edges are e_k = sorted_gt[floor(k n / 4)], k = 1..3, and a
/// value g lands in bin #{k : g > e_k}.
std::array<double, 4> gradient_histogram(std::span<const Tensor<double>> images,
                                         std::span<const Tensor<double>> gt_images);

/// Neumaier-compensated mean and population standard deviation.
struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};
MeanStd mean_std(std::span<const double> values);

}  // namespace posesynth
