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

// Dataset manifest:
//
//   {
//     "schema_version": 1,
//     "image_size": 64,
//     "videos": [
//       {"id": "v000", "person_id": "p000", "action": "toy",
//        "frames": [{"index": 0, "image": "v000/frame_0000.png",
//                    "keypoints": "v000/frame_0000.json"}, ...]}
//     ]
//   }
//
// Paths are relative to the manifest's directory. Keypoints are parsed at
// load time; images are decoded on demand.

#include <filesystem>
#include <string>
#include <vector>

#include "core/pose.hpp"
#include "core/tensor.hpp"

namespace posesynth {

inline constexpr int kManifestSchemaVersion = 1;

struct FrameRecord {
  int index = 0;
  std::string image;      // relative path
  std::string keypoints;  // relative path
  Keypoints pose;
};

struct VideoRecord {
  std::string id;
  std::string person_id;
  std::string action;
  std::vector<FrameRecord> frames;
};

struct DatasetManifest {
  int schema_version = kManifestSchemaVersion;
  int image_size = 0;
  std::filesystem::path root;
  std::vector<VideoRecord> videos;

  [[nodiscard]] std::filesystem::path resolve(const std::string& rel) const { return root / rel; }
  [[nodiscard]] std::size_t frame_count() const;
  [[nodiscard]] const VideoRecord& video(const std::string& id) const;
};

/// Parses and validates a manifest: every referenced file exists, frame
/// indices strictly increase, and each keypoint file holds 14 canonical joints.
DatasetManifest load_dataset(const std::filesystem::path& manifest_path);

/// Writes the manifest (not the frames) to `manifest_path`.
void write_manifest(const std::filesystem::path& manifest_path, const DatasetManifest& m);

/// Decodes one frame image and checks it against image_size.
Tensor<float> load_frame_image(const DatasetManifest& m, const FrameRecord& f);

/// Keeps only the named videos, in manifest order.
DatasetManifest select_videos(const DatasetManifest& m, const std::vector<std::string>& ids);

}  // namespace posesynth
