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

// Drivers behind the command-line tools: synthesis, video synthesis,
// segmentation dumps and evaluation.

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/data/dataset.hpp"
#include "core/metrics.hpp"
#include "core/model.hpp"

namespace posesynth {

/// One generator pass at batch size one; noise comes from `seed` alone.
GeneratorOutput<float> synthesize(const Model& model, const Tensor<float>& source, const Keypoints& source_pose,
                                  const Keypoints& target_pose, std::uint64_t seed);

/// The same source rendered in every target pose, each frame with the same
/// noise seed so the background is identical across frames.
std::vector<GeneratorOutput<float>> synthesize_video(const Model& model, const Tensor<float>& source,
                                                     const Keypoints& source_pose,
                                                     std::span<const Keypoints> poses, std::uint64_t seed);

/// Writes mask_00..mask_10.png, warped_00..09.png, foreground.png,
/// target_mask.png, background_input.png, background.png, output.png and a
/// tiled intermediates.png into `dir`.
void dump_intermediates(const std::filesystem::path& dir, const GeneratorOutput<float>& out);

/// Colour-coded arg-max of the layer masks, [1, 3, H, W] in [-1, 1].
Tensor<float> segmentation_visual(const Tensor<float>& masks);

/// Segmentation of one source: writes mask_00..mask_10.png and
/// segmentation.png into `dir`; returns the normalised masks.
Tensor<float> segment_to_dir(const Model& model, const Tensor<float>& source, const Keypoints& source_pose,
                             const std::filesystem::path& dir);

/// Hex FNV-1a of a tensor's raw bytes.
std::string tensor_hash(const Tensor<float>& t);

struct EvalExample {
  std::string video;
  int source_frame = 0, target_frame = 0;
  double l1 = 0.0, vgg = 0.0, ssim = 0.0, baseline_l1 = 0.0;
};

struct EvalReport {
  std::vector<EvalExample> examples;
  MeanStd l1, vgg, ssim, baseline_l1;
  std::array<double, 4> histogram_model{}, histogram_gt{};
  std::string feature_stats_source;  // "checkpoint" or "evaluation ground truth"
  std::uint64_t seed = 0;
};

/// source = first frame, targets = every other frame of each listed video
/// (all videos when `videos` is empty). Metrics use the [0, 1] scale.
EvalReport evaluate(const Model& model, const DatasetManifest& data, const std::vector<std::string>& videos,
                    std::uint64_t seed);

void write_eval_csv(const std::filesystem::path& path, const EvalReport& r);
std::string eval_summary(const EvalReport& r);
nlohmann::json eval_json(const EvalReport& r);

}  // namespace posesynth
