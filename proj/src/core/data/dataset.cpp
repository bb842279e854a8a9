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
#include "core/data/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

#include "core/data/image_io.hpp"

namespace posesynth {

std::size_t DatasetManifest::frame_count() const {
  std::size_t n = 0;
  for (const auto& v : videos) n += v.frames.size();
  return n;
}

const VideoRecord& DatasetManifest::video(const std::string& id) const {
  for (const auto& v : videos)
    if (v.id == id) return v;
  throw InvalidInput("dataset has no video '" + id + "'");
}

DatasetManifest load_dataset(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError(manifest_path.string() + ": cannot open manifest");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError(manifest_path.string() + ": malformed manifest: " + e.what());
  }
  const std::string where = manifest_path.string() + ": ";
  DatasetManifest m;
  m.root = manifest_path.parent_path();
  try {
    m.schema_version = doc.at("schema_version").get<int>();
    if (m.schema_version != kManifestSchemaVersion)
      throw DecodeError(where + "unsupported schema_version " + std::to_string(m.schema_version));
    m.image_size = doc.at("image_size").get<int>();
    if (m.image_size <= 0) throw DecodeError(where + "image_size must be positive");
    std::set<std::string> ids;
    for (const auto& jv : doc.at("videos")) {
      VideoRecord v;
      v.id = jv.at("id").get<std::string>();
      v.person_id = jv.at("person_id").get<std::string>();
      v.action = jv.value("action", std::string());
      if (!ids.insert(v.id).second) throw DecodeError(where + "duplicate video id '" + v.id + "'");
      for (const auto& jf : jv.at("frames")) {
        FrameRecord f;
        f.index = jf.at("index").get<int>();
        f.image = jf.at("image").get<std::string>();
        f.keypoints = jf.at("keypoints").get<std::string>();
        if (!v.frames.empty() && f.index <= v.frames.back().index)
          throw DecodeError(where + "video '" + v.id + "' frame indices must strictly increase");
        const auto img = m.resolve(f.image);
        if (!std::filesystem::exists(img)) throw IoError(img.string() + ": missing frame image");
        const auto kp = m.resolve(f.keypoints);
        if (!std::filesystem::exists(kp)) throw IoError(kp.string() + ": missing keypoint file");
        f.pose = read_keypoints(kp);
        v.frames.push_back(std::move(f));
      }
      m.videos.push_back(std::move(v));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError(where + "malformed manifest: " + e.what());
  }
  return m;
}

void write_manifest(const std::filesystem::path& manifest_path, const DatasetManifest& m) {
  nlohmann::json videos = nlohmann::json::array();
  for (const auto& v : m.videos) {
    nlohmann::json frames = nlohmann::json::array();
    for (const auto& f : v.frames) frames.push_back({{"index", f.index}, {"image", f.image}, {"keypoints", f.keypoints}});
    videos.push_back({{"id", v.id}, {"person_id", v.person_id}, {"action", v.action}, {"frames", std::move(frames)}});
  }
  const nlohmann::json doc = {
      {"schema_version", m.schema_version}, {"image_size", m.image_size}, {"videos", std::move(videos)}};
  if (manifest_path.has_parent_path()) std::filesystem::create_directories(manifest_path.parent_path());
  std::ofstream out(manifest_path);
  if (!out) throw IoError(manifest_path.string() + ": cannot write manifest");
  out << doc.dump(2) << "\n";
  if (!out) throw IoError(manifest_path.string() + ": write failed");
}

Tensor<float> load_frame_image(const DatasetManifest& m, const FrameRecord& f) {
  const auto path = m.resolve(f.image);
  Tensor<float> img = read_image(path);
  if (img.h() != m.image_size || img.w() != m.image_size)
    throw DecodeError(path.string() + ": image is " + std::to_string(img.w()) + "x" + std::to_string(img.h()) +
                      ", manifest declares " + std::to_string(m.image_size));
  return img;
}

DatasetManifest select_videos(const DatasetManifest& m, const std::vector<std::string>& ids) {
  DatasetManifest out = m;
  out.videos.clear();
  for (const auto& v : m.videos)
    if (std::find(ids.begin(), ids.end(), v.id) != ids.end()) out.videos.push_back(v);
  return out;
}

}  // namespace posesynth
