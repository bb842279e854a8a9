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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "core/data/toy.hpp"
#include "core/pose.hpp"
#include "core/tensor.hpp"

namespace posesynth::testing {

template <typename T>
Tensor<T> random_tensor(Shape s, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<T> t(s);
  std::uniform_real_distribution<double> u(lo, hi);
  for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = static_cast<T>(u(rng));
  return t;
}

/// A standing figure scaled to a `size` x `size` frame, with jitter.
inline Keypoints standing_pose(int size, std::mt19937_64& rng, double jitter = 0.0) {
  static constexpr double kLayout[kNumJoints][2] = {
      {0.50, 0.14}, {0.50, 0.24}, {0.40, 0.26}, {0.60, 0.26}, {0.36, 0.40}, {0.64, 0.40}, {0.34, 0.54},
      {0.66, 0.54}, {0.44, 0.54}, {0.56, 0.54}, {0.43, 0.70}, {0.57, 0.70}, {0.42, 0.86}, {0.58, 0.86}};
  std::uniform_real_distribution<double> u(-jitter, jitter);
  Keypoints kp;
  for (int j = 0; j < kNumJoints; ++j)
    kp.joints[j] = Joint{kLayout[j][0] * size + u(rng) * size, kLayout[j][1] * size + u(rng) * size, true};
  return kp;
}

inline double rel_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12});
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("posesynth_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

/// Small toy dataset at 64x64, one person per video.
inline DatasetManifest toy_dataset(const std::string& name, int videos, int frames, std::uint64_t seed = 1) {
  ToyFigureSpec spec;
  spec.seed = seed;
  return generate_toy_dataset(spec, videos, frames, temp_dir(name));
}

}  // namespace posesynth::testing
