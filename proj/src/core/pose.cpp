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
#include "core/pose.hpp"

#include <cmath>
#include <fstream>

namespace posesynth {

std::string_view joint_name(JointId j) { return kJointNames[index_of(j)]; }

JointId mirror(JointId j) {
  const int i = index_of(j);
  if (i < 2) return j;
  // Left/right joints alternate starting at index 2.
  return static_cast<JointId>(i % 2 == 0 ? i + 1 : i - 1);
}

bool Keypoints::all_present() const {
  for (const auto& j : joints)
    if (!j.present) return false;
  return true;
}

void Keypoints::validate() const {
  for (int i = 0; i < kNumJoints; ++i) {
    const auto& j = joints[i];
    if (j.present && (!std::isfinite(j.x) || !std::isfinite(j.y)))
      throw InvalidInput("joint '" + std::string(kJointNames[i]) + "' has non-finite coordinates");
  }
}

int PartScheme::joint_slots() const {
  int n = 0;
  for (const auto& p : parts) n += static_cast<int>(p.joints.size());
  return n;
}

const PartScheme& part_scheme() {
  using J = JointId;
  static const PartScheme scheme{{
      {"head", {J::Head, J::Neck}},
      {"left_upper_arm", {J::LeftShoulder, J::LeftElbow}},
      {"right_upper_arm", {J::RightShoulder, J::RightElbow}},
      {"left_lower_arm", {J::LeftElbow, J::LeftWrist}},
      {"right_lower_arm", {J::RightElbow, J::RightWrist}},
      {"left_upper_leg", {J::LeftHip, J::LeftKnee}},
      {"right_upper_leg", {J::RightHip, J::RightKnee}},
      {"left_lower_leg", {J::LeftKnee, J::LeftAnkle}},
      {"right_lower_leg", {J::RightKnee, J::RightAnkle}},
      {"torso", {J::LeftShoulder, J::RightShoulder, J::LeftHip, J::RightHip}},
  }};
  return scheme;
}

double default_sigma_heat(int resolution) { return 7.0 * resolution / 256.0; }

template <typename T>
Tensor<T> render_heatmaps(const Keypoints& kp, int height, int width, double sigma_heat) {
  if (height <= 0 || width <= 0) throw InvalidInput("render_heatmaps: image size must be positive");
  if (!(sigma_heat > 0.0)) throw InvalidInput("render_heatmaps: sigma_heat must be positive");
  kp.validate();

  Tensor<T> out(1, kNumJoints, height, width);
  const double inv = 1.0 / (2.0 * sigma_heat * sigma_heat);
  std::vector<double> gx(width), gy(height);
  for (int j = 0; j < kNumJoints; ++j) {
    const Joint& jt = kp.joints[j];
    if (!jt.present) continue;
    if (jt.x < 0.0 || jt.y < 0.0 || jt.x >= width || jt.y >= height) continue;
    // The Gaussian is separable: exp(-(dx^2+dy^2)k) = exp(-dx^2 k) exp(-dy^2 k).
    for (int x = 0; x < width; ++x) gx[x] = std::exp(-(x - jt.x) * (x - jt.x) * inv);
    for (int y = 0; y < height; ++y) gy[y] = std::exp(-(y - jt.y) * (y - jt.y) * inv);
    T* plane = out.plane(0, j);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) plane[y * width + x] = static_cast<T>(gy[y] * gx[x]);
  }
  return out;
}

namespace {

// Center and inverse covariance of one part's Gaussian.
struct PartGaussian {
  double cx, cy;
  double ixx, ixy, iyy;
};

constexpr double kMinAxisPx = 4.0;
constexpr double kTorsoCovScale = 1.5;

PartGaussian limb_gaussian(const Joint& a, const Joint& b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len = std::hypot(dx, dy);
  double ux = 1.0, uy = 0.0;
  if (len > 0.0) {
    ux = dx / len;
    uy = dy / len;
  }
  const double sa = std::max(len / 4.0, kMinAxisPx);
  const double sp = std::max(len / 8.0, kMinAxisPx);
  const double ia = 1.0 / (sa * sa), ip = 1.0 / (sp * sp);
  // R diag(ia, ip) R^T with R = [u, u_perp].
  return {0.5 * (a.x + b.x), 0.5 * (a.y + b.y), ia * ux * ux + ip * uy * uy, (ia - ip) * ux * uy,
          ia * uy * uy + ip * ux * ux};
}

PartGaussian cloud_gaussian(const std::vector<const Joint*>& pts) {
  double mx = 0.0, my = 0.0;
  for (const auto* p : pts) {
    mx += p->x;
    my += p->y;
  }
  mx /= pts.size();
  my /= pts.size();
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto* p : pts) {
    sxx += (p->x - mx) * (p->x - mx);
    sxy += (p->x - mx) * (p->y - my);
    syy += (p->y - my) * (p->y - my);
  }
  const double k = kTorsoCovScale / pts.size();
  sxx *= k;
  sxy *= k;
  syy *= k;

  // Floor the eigenvalues so collinear joints still give a finite-width blob.
  const double tr = sxx + syy;
  const double disc = std::sqrt(std::max(0.0, 0.25 * (sxx - syy) * (sxx - syy) + sxy * sxy));
  const double l1 = 0.5 * tr + disc, l2 = 0.5 * tr - disc;
  double vx = 1.0, vy = 0.0;  // eigenvector of l1
  if (std::abs(sxy) > 0.0) {
    vx = l1 - syy;
    vy = sxy;
    const double nv = std::hypot(vx, vy);
    vx /= nv;
    vy /= nv;
  } else if (syy > sxx) {
    vx = 0.0;
    vy = 1.0;
  }
  const double floor2 = kMinAxisPx * kMinAxisPx;
  const double i1 = 1.0 / std::max(l1, floor2), i2 = 1.0 / std::max(l2, floor2);
  return {mx, my, i1 * vx * vx + i2 * vy * vy, (i1 - i2) * vx * vy, i1 * vy * vy + i2 * vx * vx};
}

}  // namespace

template <typename T>
Tensor<T> prior_masks(const Keypoints& kp, const PartScheme& scheme, int height, int width, double floor) {
  if (height <= 0 || width <= 0) throw InvalidInput("prior_masks: image size must be positive");
  kp.validate();
  const int parts = static_cast<int>(scheme.parts.size());

  std::vector<PartGaussian> gs;
  gs.reserve(parts);
  for (const auto& part : scheme.parts) {
    std::vector<const Joint*> pts;
    for (JointId j : part.joints) {
      const Joint& jt = kp[j];
      if (!jt.present)
        throw InvalidInput("prior_masks: part '" + std::string(part.name) + "' is missing joint '" +
                           std::string(joint_name(j)) + "'");
      pts.push_back(&jt);
    }
    gs.push_back(pts.size() == 2 ? limb_gaussian(*pts[0], *pts[1]) : cloud_gaussian(pts));
  }

  Tensor<T> out(1, parts + 1, height, width);
  std::vector<double> maxima(static_cast<std::size_t>(height) * width, 0.0);
  for (int l = 0; l < parts; ++l) {
    const PartGaussian& g = gs[l];
    T* plane = out.plane(0, l);
    for (int y = 0; y < height; ++y) {
      const double vy = y - g.cy;
      for (int x = 0; x < width; ++x) {
        const double vx = x - g.cx;
        const double q = g.ixx * vx * vx + 2.0 * g.ixy * vx * vy + g.iyy * vy * vy;
        const double v = std::exp(-0.5 * q);
        const std::size_t i = static_cast<std::size_t>(y) * width + x;
        maxima[i] = std::max(maxima[i], v);
        plane[i] = static_cast<T>(std::max(v, floor));
      }
    }
  }
  T* bg = out.plane(0, parts);
  for (std::size_t i = 0; i < maxima.size(); ++i) bg[i] = static_cast<T>(std::max(1.0 - maxima[i], floor));
  return out;
}

template Tensor<float> render_heatmaps<float>(const Keypoints&, int, int, double);
template Tensor<double> render_heatmaps<double>(const Keypoints&, int, int, double);
template Tensor<float> prior_masks<float>(const Keypoints&, const PartScheme&, int, int, double);
template Tensor<double> prior_masks<double>(const Keypoints&, const PartScheme&, int, int, double);

nlohmann::json keypoints_to_json(const Keypoints& kp) {
  nlohmann::json joints = nlohmann::json::array();
  for (int i = 0; i < kNumJoints; ++i) {
    const auto& j = kp.joints[i];
    joints.push_back({{"name", kJointNames[i]}, {"x", j.x}, {"y", j.y}, {"present", j.present}});
  }
  return {{"schema_version", kKeypointSchemaVersion}, {"joints", joints}};
}

Keypoints keypoints_from_json(const nlohmann::json& doc, const std::string& origin) {
  auto fail = [&](const std::string& what) { return InvalidInput(origin + ": " + what); };
  if (!doc.is_object()) throw fail("keypoint document must be an object");
  if (!doc.contains("schema_version") || !doc["schema_version"].is_number_integer())
    throw fail("missing integer schema_version");
  if (doc["schema_version"].get<int>() != kKeypointSchemaVersion)
    throw fail("unsupported keypoint schema_version " + doc["schema_version"].dump());
  if (!doc.contains("joints") || !doc["joints"].is_array()) throw fail("missing joints array");
  const auto& arr = doc["joints"];
  if (arr.size() != kNumJoints)
    throw fail("expected " + std::to_string(kNumJoints) + " joints, found " + std::to_string(arr.size()));

  Keypoints kp;
  for (int i = 0; i < kNumJoints; ++i) {
    const auto& e = arr[i];
    if (!e.is_object()) throw fail("joint " + std::to_string(i) + " is not an object");
    if (e.contains("name") && e["name"].get<std::string>() != kJointNames[i])
      throw fail("joint " + std::to_string(i) + " is '" + e["name"].get<std::string>() + "', expected '" +
                 std::string(kJointNames[i]) + "'");
    if (!e.contains("x") || !e.contains("y") || !e["x"].is_number() || !e["y"].is_number())
      throw fail("joint '" + std::string(kJointNames[i]) + "' lacks numeric x/y");
    kp.joints[i].x = e["x"].get<double>();
    kp.joints[i].y = e["y"].get<double>();
    kp.joints[i].present = e.value("present", true);
  }
  try {
    kp.validate();
  } catch (const InvalidInput& err) {
    throw fail(err.what());
  }
  return kp;
}

Keypoints read_keypoints(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open keypoint file " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(path.string() + ": malformed keypoint document: " + e.what());
  }
  return keypoints_from_json(doc, path.string());
}

void write_keypoints(const std::filesystem::path& path, const Keypoints& kp) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write keypoint file " + path.string());
  out << keypoints_to_json(kp).dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace posesynth
