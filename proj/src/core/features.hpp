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

// Frozen VGG19-shaped feature map used by the perceptual loss. The features
// are the post-ReLU outputs of the first 16 convolutions (blocks 1 to 5, with
// 2x2 max pooling between blocks).

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "core/checkpoint.hpp"
#include "core/tensor.hpp"

namespace posesynth {

enum class FeatureProfile { Vgg19, RandomFixed };

std::string_view feature_profile_name(FeatureProfile p);
FeatureProfile parse_feature_profile(std::string_view s);

inline constexpr int kFeatureLayers = 16;
inline constexpr double kFeatureStdFloor = 1e-5;

/// Record name of conv layer `i` (0-based) in a VGG19 weight container, e.g.
/// "conv3_2.weight".
std::string vgg19_layer_name(int i);

template <typename T>
class FeatureExtractor {
 public:
  struct Trace {
    std::vector<Tensor<T>> conv_inputs;  // input of each conv
    std::vector<Tensor<T>> features;     // post-ReLU output of each conv
    std::vector<std::vector<std::uint32_t>> pool_argmax;
  };

  struct Stats {
    std::vector<std::vector<double>> mean;  // [layer][channel]
    std::vector<std::vector<double>> std;
  };

  FeatureExtractor() = default;

  /// Frozen He-initialised weights; `width_divisor` narrows every layer.
  static FeatureExtractor random_fixed(std::uint64_t seed, int width_divisor);
  /// Pretrained weights from a container of kind "posesynth.vgg19".
  static FeatureExtractor load_vgg19(const std::filesystem::path& path);

  [[nodiscard]] FeatureProfile profile() const { return profile_; }
  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] int width_divisor() const { return divisor_; }
  [[nodiscard]] const std::vector<int>& widths() const { return widths_; }

  /// Images in [-1, 1], [N, 3, H, W] with H, W divisible by 16.
  std::vector<Tensor<T>> features(const Tensor<T>& image, Trace* trace = nullptr) const;
  /// dL/dimage from per-layer feature gradients (empty entries mean zero).
  Tensor<T> backward(const Trace& trace, std::vector<Tensor<T>> grads) const;

  /// Per-channel mean and population std over all pixels of `images`; std is
  /// floored at kFeatureStdFloor.
  void fit_stats(std::span<const Tensor<T>> images);
  void set_stats(Stats s);
  [[nodiscard]] bool fitted() const { return !stats_.std.empty(); }
  [[nodiscard]] const Stats& stats() const { return stats_; }

  /// Mean over all feature elements of |phi(y) - phi(t)| / std. Writes
  /// dL/dy when `grad_y` is non-null.
  [[nodiscard]] double loss(const Tensor<T>& y, const Tensor<T>& target, Tensor<T>* grad_y = nullptr) const;

  /// Stores statistics (and the weights for random-fixed, as a seed) under
  /// `prefix`; restore() rebuilds an extractor from the same records.
  void store(Container& c, const std::string& prefix) const;
  static FeatureExtractor restore(const Container& c, const std::string& prefix,
                                  const std::filesystem::path& vgg19_weights = {});

  template <typename U>
  [[nodiscard]] FeatureExtractor<U> cast() const {
    FeatureExtractor<U> out;
    out.profile_ = profile_;
    out.seed_ = seed_;
    out.divisor_ = divisor_;
    out.widths_ = widths_;
    out.stats_ = {stats_.mean, stats_.std};
    for (const auto& w : weights_) out.weights_.emplace_back(w.begin(), w.end());
    for (const auto& b : biases_) out.biases_.emplace_back(b.begin(), b.end());
    return out;
  }

 private:
  template <typename>
  friend class FeatureExtractor;

  FeatureProfile profile_ = FeatureProfile::RandomFixed;
  std::uint64_t seed_ = 0;
  int divisor_ = 1;
  std::vector<int> widths_;
  std::vector<std::vector<T>> weights_;  // [out, in, 3, 3]
  std::vector<std::vector<T>> biases_;
  Stats stats_;
};

extern template class FeatureExtractor<float>;
extern template class FeatureExtractor<double>;

}  // namespace posesynth
