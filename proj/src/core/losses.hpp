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

#include <span>
#include <string_view>

#include "core/features.hpp"
#include "core/nn/network.hpp"
#include "core/tensor.hpp"

namespace posesynth {

enum class LossMode { L1, Vgg, VggGan };

std::string_view loss_mode_name(LossMode m);
LossMode parse_loss_mode(std::string_view s);

inline constexpr double kDefaultGanWeight = 0.1;
inline constexpr double kProbabilityClamp = 1e-7;

struct LossReport {
  double l1 = 0.0;
  double vgg = 0.0;
  double gan_g = 0.0;
  double gan_d = 0.0;
  double combined = 0.0;
  double lambda = kDefaultGanWeight;
};

/// Mean absolute difference. Writes dL/dy when `grad_y` is non-null.
template <typename T>
double loss_l1(const Tensor<T>& y, const Tensor<T>& target, Tensor<T>* grad_y = nullptr);

template <typename T>
double loss_vgg(const Tensor<T>& y, const Tensor<T>& target, const FeatureExtractor<T>& phi,
                Tensor<T>* grad_y = nullptr) {
  return phi.loss(y, target, grad_y);
}

inline double loss_combined(double vgg, double gan_g, double lambda = kDefaultGanWeight) {
  return vgg + lambda * gan_g;
}

/// p clamped to [1e-7, 1 - 1e-7].
double clamp_probability(double p);

/// -mean[log p_real + log(1 - p_fake)] over paired probabilities.
double gan_d_from_probabilities(std::span<const double> p_real, std::span<const double> p_fake);
/// -mean log p_fake, or mean log(1 - p_fake) when `saturating`.
double gan_g_from_probabilities(std::span<const double> p_fake, bool saturating = false);

/// Probability-of-real (first softmax output) per sample of D([image, heat]).
template <typename T>
std::vector<double> discriminator_probabilities(const nn::Network<T>& d, const Tensor<T>& image,
                                                const Tensor<T>& heatmaps,
                                                typename nn::Network<T>::Trace* trace = nullptr);

/// gan_d on (real, fake) pairs; accumulates dgan_d/dtheta_D into D's grads.
template <typename T>
double gan_d_step_gradients(nn::Network<T>& d, const Tensor<T>& real, const Tensor<T>& fake,
                            const Tensor<T>& heatmaps);

/// gan_g on fake images; writes dgan_g/dy into `grad_y` (D's grads are also
/// touched and must be cleared before D's next update).
template <typename T>
double gan_g_gradients(nn::Network<T>& d, const Tensor<T>& fake, const Tensor<T>& heatmaps, bool saturating,
                       Tensor<T>* grad_y);

}  // namespace posesynth
