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
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "core/data/dataset.hpp"
#include "core/losses.hpp"
#include "core/model.hpp"

namespace posesynth {

struct AugmentRanges {
  double scale_min = 0.9, scale_max = 1.1;
  double translate_px = 10.0;
  double rotate_deg = 10.0;
  double flip_probability = 0.5;
  double saturation_min = 0.8, saturation_max = 1.2;

  static AugmentRanges identity() { return {1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0}; }
  void validate() const;
  [[nodiscard]] nlohmann::json to_json() const;
  static AugmentRanges from_json(const nlohmann::json& j);
};

/// One draw of every augmentation.
struct AugmentParams {
  bool flip = false;
  double scale = 1.0, rotate_rad = 0.0, tx = 0.0, ty = 0.0;
  double saturation = 1.0;

  [[nodiscard]] bool spatial_identity() const {
    return !flip && scale == 1.0 && rotate_rad == 0.0 && tx == 0.0 && ty == 0.0;
  }
};

struct TrainConfig {
  GeneratorConfig generator;
  LossMode mode = LossMode::L1;
  double learning_rate = 1e-4;
  double beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8;
  int batch_size = 8;
  std::int64_t max_steps = 1000;
  double lambda = kDefaultGanWeight;
  bool saturating_gan = false;
  bool augment = true;
  AugmentRanges augment_ranges;
  double holdout_fraction = 0.1;
  std::uint64_t seed = 1;
  std::int64_t checkpoint_every = 0;  // 0: only at the end
  std::string init = "truncated_normal";
  FeatureProfile feature_profile = FeatureProfile::RandomFixed;
  std::string vgg19_weights;
  int feature_stats_images = 32;

  void validate() const;
  [[nodiscard]] nn::InitScheme init_scheme() const;
  [[nodiscard]] nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
  /// Desk defaults: 64x64, quarter-width networks, batch 4.
  static TrainConfig desk();
};

struct TrainingExample {
  Tensor<float> source, target;  // [1, 3, H, W]
  Keypoints source_pose, target_pose;
  std::string video_id, person_id;
  int source_frame = 0, target_frame = 0;
};

struct DatasetSplit {
  std::vector<std::string> train, test;  // video ids, manifest order
};

/// Holds out about `fraction` of the videos. Videos of one person always land
/// on the same side; both sides are non-empty.
DatasetSplit split_dataset(const DatasetManifest& m, double fraction, std::uint64_t seed);

/// Ordered pair (s, t), s != t, uniform over the n(n-1) possibilities.
std::pair<int, int> sample_frame_pair(int n, std::mt19937_64& rng);

AugmentParams draw_augment(const AugmentRanges& r, std::mt19937_64& rng);
Keypoints augment_keypoints(const Keypoints& kp, const AugmentParams& p, int width, int height);
/// Spatial map with edge-clamped bilinear resampling, then saturation.
Tensor<float> augment_image(const Tensor<float>& image, const AugmentParams& p);
TrainingExample augment(const TrainingExample& ex, const AugmentRanges& r, std::mt19937_64& rng);

template <typename T>
class Adam {
 public:
  Adam(double lr, double beta1, double beta2, double eps) : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}
  void step(nn::Network<T>& net);
  [[nodiscard]] std::int64_t updates() const { return t_; }

 private:
  double lr_, b1_, b2_, eps_;
  std::int64_t t_ = 0;
  std::vector<std::vector<T>> m_, v_;  // per parameter
};

/// One optimisation step at a time over an in-memory model.
class Trainer {
 public:
  Trainer(TrainConfig cfg, Model& model);

  LossReport step(std::span<const TrainingExample> batch);

  [[nodiscard]] std::int64_t generator_updates() const { return g_updates_; }
  [[nodiscard]] std::int64_t discriminator_updates() const { return d_updates_; }
  [[nodiscard]] const TrainConfig& config() const { return cfg_; }

 private:
  TrainConfig cfg_;
  Model& model_;
  Adam<float> seg_opt_, fg_opt_, bg_opt_, d_opt_;
  std::mt19937_64 noise_rng_;
  std::int64_t g_updates_ = 0, d_updates_ = 0;
};

/// Copies the generator from a checkpoint (fingerprint-checked against
/// `cfg.generator`) and attaches a freshly initialised discriminator.
Model warm_start_gan(const std::filesystem::path& checkpoint, const TrainConfig& cfg);

struct TrainOptions {
  std::filesystem::path checkpoint_out;  // empty: do not write
  std::filesystem::path log_csv;         // empty: no log
  std::filesystem::path warm_start;      // VGG checkpoint for vgg+gan
  std::function<bool(std::int64_t, const LossReport&)> progress;  // false stops early
};

struct TrainResult {
  Model model;
  DatasetSplit split;
  std::vector<LossReport> curve;
  std::set<std::string> sampled_videos;
  std::int64_t generator_updates = 0, discriminator_updates = 0;
};

TrainResult train_model(const TrainConfig& cfg, const DatasetManifest& data, const TrainOptions& opts = {});

}  // namespace posesynth
