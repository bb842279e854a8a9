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
#include "core/losses.hpp"

#include <algorithm>
#include <cmath>

namespace posesynth {

std::string_view loss_mode_name(LossMode m) {
  switch (m) {
    case LossMode::L1: return "l1";
    case LossMode::Vgg: return "vgg";
    case LossMode::VggGan: return "vgg+gan";
  }
  return "?";
}

LossMode parse_loss_mode(std::string_view s) {
  if (s == "l1") return LossMode::L1;
  if (s == "vgg") return LossMode::Vgg;
  if (s == "vgg+gan") return LossMode::VggGan;
  throw InvalidInput("unknown loss mode '" + std::string(s) + "' (expected l1, vgg or vgg+gan)");
}

template <typename T>
double loss_l1(const Tensor<T>& y, const Tensor<T>& target, Tensor<T>* grad_y) {
  require_same_shape(y, target, "L1 loss");
  if (y.empty()) throw InvalidInput("L1 loss: empty tensors");
  const T* a = y.data();
  const T* b = target.data();
  const double n = static_cast<double>(y.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) acc += std::abs(static_cast<double>(a[i]) - b[i]);
  if (grad_y != nullptr) {
    *grad_y = Tensor<T>(y.shape());
    const T step = static_cast<T>(1.0 / n);
    T* g = grad_y->data();
    for (std::size_t i = 0; i < y.size(); ++i) g[i] = a[i] > b[i] ? step : (a[i] < b[i] ? -step : T(0));
  }
  return acc / n;
}

double clamp_probability(double p) { return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp); }

double gan_d_from_probabilities(std::span<const double> p_real, std::span<const double> p_fake) {
  if (p_real.size() != p_fake.size() || p_real.empty()) throw InvalidInput("gan_d: need paired probabilities");
  double acc = 0.0;
  for (std::size_t i = 0; i < p_real.size(); ++i)
    acc += std::log(clamp_probability(p_real[i])) + std::log(1.0 - clamp_probability(p_fake[i]));
  return -acc / static_cast<double>(p_real.size());
}

double gan_g_from_probabilities(std::span<const double> p_fake, bool saturating) {
  if (p_fake.empty()) throw InvalidInput("gan_g: no probabilities");
  double acc = 0.0;
  for (double p : p_fake) acc += saturating ? std::log(1.0 - clamp_probability(p)) : -std::log(clamp_probability(p));
  return acc / static_cast<double>(p_fake.size());
}

namespace {

bool clamped(double p) { return p < kProbabilityClamp || p > 1.0 - kProbabilityClamp; }

template <typename T>
Tensor<T> first_channels_grad(const Tensor<T>& head, const std::vector<double>& dp) {
  Tensor<T> g(head.shape());
  for (int n = 0; n < head.n(); ++n) g.at(n, 0, 0, 0) = static_cast<T>(dp[n]);
  return g;
}

}  // namespace

template <typename T>
std::vector<double> discriminator_probabilities(const nn::Network<T>& d, const Tensor<T>& image,
                                                const Tensor<T>& heatmaps, typename nn::Network<T>::Trace* trace) {
  const auto out = d.forward(concat_channels({&image, &heatmaps}), trace);
  std::vector<double> p(image.n());
  for (int n = 0; n < image.n(); ++n) p[n] = static_cast<double>(out.front().at(n, 0, 0, 0));
  return p;
}

template <typename T>
double gan_d_step_gradients(nn::Network<T>& d, const Tensor<T>& real, const Tensor<T>& fake,
                            const Tensor<T>& heatmaps) {
  require_same_shape(real, fake, "gan_d");
  const int n = real.n();
  const std::vector<Tensor<T>> images{real, fake};
  const std::vector<Tensor<T>> heats{heatmaps, heatmaps};
  typename nn::Network<T>::Trace trace;
  const auto p = discriminator_probabilities(d, stack_samples<T>(images), stack_samples<T>(heats), &trace);
  const std::span<const double> pr(p.data(), n), pf(p.data() + n, n);
  const double loss = gan_d_from_probabilities(pr, pf);

  std::vector<double> dp(2 * n, 0.0);
  for (int i = 0; i < n; ++i) {
    if (!clamped(pr[i])) dp[i] = -1.0 / (n * pr[i]);
    if (!clamped(pf[i])) dp[n + i] = 1.0 / (n * (1.0 - pf[i]));
  }
  const std::vector<Tensor<T>> head{first_channels_grad(trace.heads.front(), dp)};
  d.backward(trace, head, false);
  return loss;
}

template <typename T>
double gan_g_gradients(nn::Network<T>& d, const Tensor<T>& fake, const Tensor<T>& heatmaps, bool saturating,
                       Tensor<T>* grad_y) {
  const int n = fake.n();
  typename nn::Network<T>::Trace trace;
  const auto p = discriminator_probabilities(d, fake, heatmaps, &trace);
  const double loss = gan_g_from_probabilities(p, saturating);
  if (grad_y != nullptr) {
    std::vector<double> dp(n, 0.0);
    for (int i = 0; i < n; ++i)
      if (!clamped(p[i])) dp[i] = saturating ? -1.0 / (n * (1.0 - p[i])) : -1.0 / (n * p[i]);
    const std::vector<Tensor<T>> head{first_channels_grad(trace.heads.front(), dp)};
    *grad_y = slice_channels(d.backward(trace, head, true), 0, 3);
  }
  return loss;
}

#define POSESYNTH_INSTANTIATE_LOSSES(T)                                                                     \
  template double loss_l1<T>(const Tensor<T>&, const Tensor<T>&, Tensor<T>*);                               \
  template std::vector<double> discriminator_probabilities<T>(const nn::Network<T>&, const Tensor<T>&,      \
                                                              const Tensor<T>&,                             \
                                                              typename nn::Network<T>::Trace*);             \
  template double gan_d_step_gradients<T>(nn::Network<T>&, const Tensor<T>&, const Tensor<T>&,              \
                                          const Tensor<T>&);                                                \
  template double gan_g_gradients<T>(nn::Network<T>&, const Tensor<T>&, const Tensor<T>&, bool, Tensor<T>*);

POSESYNTH_INSTANTIATE_LOSSES(float)
POSESYNTH_INSTANTIATE_LOSSES(double)

#undef POSESYNTH_INSTANTIATE_LOSSES

}  // namespace posesynth
