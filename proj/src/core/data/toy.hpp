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

// Synthetic articulated stick figures with exact keypoints. Each video has
// one person (fixed part colours) over a fixed smooth background; joint
// angles and the root position follow per-video sinusoids.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/data/dataset.hpp"
#include "core/pose.hpp"
#include "core/tensor.hpp"

namespace posesynth {

/// Lengths are fractions of the image size.
struct ToyFigureSpec {
  int image_size = 64;
  std::uint64_t seed = 1;
  int persons = 0;  // 0: one person per video
  double torso = 0.24, shoulder_half = 0.09, hip_half = 0.06;
  double neck = 0.09, head_radius = 0.07;
  double upper_arm = 0.15, lower_arm = 0.14, upper_leg = 0.17, lower_leg = 0.16;
  double arm_radius = 0.035, leg_radius = 0.045;
  double motion = 1.0;         // scales every joint-angle amplitude
  double drift = 0.10;         // root sway amplitude
  double cycle_frames = 30.0;  // nominal period of the slowest motion

  void validate() const;
  [[nodiscard]] nlohmann::json to_json() const;
  static ToyFigureSpec from_json(const nlohmann::json& j);
};

struct ToyVideo {
  std::string id;
  std::string person_id;
  std::array<std::array<float, 3>, kNumParts> part_rgb{};  // in [-1, 1]
  std::array<float, 3> bg_base{};
  std::array<std::array<double, 5>, 3> bg_waves{};  // per channel: amp, kx, ky, phase, unused
  std::array<double, 12> phase{};
  std::array<double, 12> rate{};
};

struct ToyFrame {
  Tensor<float> image;  // [1, 3, S, S]
  Keypoints pose;
  /// Unoccluded shape of each part (1 = covered), row-major S*S.
  std::array<std::vector<std::uint8_t>, kNumParts> coverage;
};

ToyVideo make_toy_video(const ToyFigureSpec& spec, int video_index);
Keypoints toy_pose(const ToyFigureSpec& spec, const ToyVideo& video, int frame);
ToyFrame render_toy_frame(const ToyFigureSpec& spec, const ToyVideo& video, int frame);

/// Writes <out>/manifest.json plus <out>/<video>/frame_NNNN.{png,json}.
DatasetManifest generate_toy_dataset(const ToyFigureSpec& spec, int n_videos, int frames_per_video,
                                     const std::filesystem::path& out);

}  // namespace posesynth
