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
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "core/tensor.hpp"

namespace posesynth {

inline constexpr int kNumJoints = 14;
inline constexpr int kNumParts = 10;
inline constexpr int kNumLayers = kNumParts + 1;  // parts plus background
inline constexpr int kBackgroundLayer = kNumParts;

/// Canonical joint order. Every serialization and every heatmap channel uses it.
enum class JointId : int {
  Head = 0,
  Neck,
  LeftShoulder,
  RightShoulder,
  LeftElbow,
  RightElbow,
  LeftWrist,
  RightWrist,
  LeftHip,
  RightHip,
  LeftKnee,
  RightKnee,
  LeftAnkle,
  RightAnkle,
};

inline constexpr std::array<std::string_view, kNumJoints> kJointNames = {
    "head",       "neck",      "left_shoulder", "right_shoulder", "left_elbow",
    "right_elbow", "left_wrist", "right_wrist",  "left_hip",       "right_hip",
    "left_knee",  "right_knee", "left_ankle",    "right_ankle"};

constexpr int index_of(JointId j) { return static_cast<int>(j); }
std::string_view joint_name(JointId j);

/// Left/right counterpart; head and neck map to themselves.
JointId mirror(JointId j);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct Joint {
  double x = 0.0;
  double y = 0.0;
  bool present = false;
};

struct Keypoints {
  std::array<Joint, kNumJoints> joints{};

  Joint& operator[](JointId j) { return joints[index_of(j)]; }
  const Joint& operator[](JointId j) const { return joints[index_of(j)]; }

  [[nodiscard]] bool all_present() const;
  /// Throws InvalidInput if a present joint has a non-finite coordinate.
  void validate() const;
};

struct BodyPart {
  std::string_view name;
  std::vector<JointId> joints;
};

struct PartScheme {
  std::vector<BodyPart> parts;

  [[nodiscard]] const BodyPart& torso() const { return parts.back(); }
  [[nodiscard]] int joint_slots() const;
};

/// head, upper arms, lower arms, upper legs, lower legs, torso (last).
const PartScheme& part_scheme();

/// 7 px at 256x256, scaled with resolution.
double default_sigma_heat(int resolution);

inline constexpr double kPriorFloor = 1e-6;

/// One channel per joint, peak 1 at the joint. Absent joints and joints outside
/// the image render all-zero channels. Returns [1, J, H, W].
template <typename T>
Tensor<T> render_heatmaps(const Keypoints& kp, int height, int width, double sigma_heat);

/// Coarse Gaussian layout of each part plus a background channel (1 - max over
/// parts), every entry floored at `floor`. Returns [1, L+1, H, W].
template <typename T>
Tensor<T> prior_masks(const Keypoints& kp, const PartScheme& scheme, int height, int width,
                      double floor = kPriorFloor);

// Keypoint annotation documents

inline constexpr int kKeypointSchemaVersion = 1;

nlohmann::json keypoints_to_json(const Keypoints& kp);
/// `origin` is used in error messages (typically the file path).
Keypoints keypoints_from_json(const nlohmann::json& doc, const std::string& origin);
Keypoints read_keypoints(const std::filesystem::path& path);
void write_keypoints(const std::filesystem::path& path, const Keypoints& kp);

}  // namespace posesynth
