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
#include "core/data/toy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "core/data/image_io.hpp"
#include "core/random.hpp"

namespace posesynth {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Degrees of freedom, in ToyVideo::phase/rate order.
enum Dof { Lean, Tilt, LShoulder, RShoulder, LElbow, RElbow, LHip, RHip, LKnee, RKnee, RootX, RootY };

// {base, amplitude} per degree of freedom; angles in radians from straight down.
constexpr std::array<std::array<double, 2>, 12> kMotion = {{
    {0.0, 0.12}, {0.0, 0.30}, {0.35, 0.90}, {0.35, 0.90}, {0.6, 0.6}, {0.6, 0.6},
    {0.12, 0.45}, {0.12, 0.45}, {0.4, 0.4}, {0.4, 0.4}, {0.0, 1.0}, {0.0, 0.3},
}};

Point2 dir(double theta) { return {std::sin(theta), std::cos(theta)}; }
Point2 add(Point2 a, Point2 b, double s = 1.0) { return {a.x + s * b.x, a.y + s * b.y}; }

std::array<float, 3> hsv(double h, double s, double v) {
  const double c = v * s, hp = std::fmod(h, 1.0) * 6.0, x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(hp)) {
    case 0: r = c, g = x; break;
    case 1: r = x, g = c; break;
    case 2: g = c, b = x; break;
    case 3: g = x, b = c; break;
    case 4: r = x, b = c; break;
    default: r = c, b = x; break;
  }
  const double m = v - c;
  return {static_cast<float>(2.0 * (r + m) - 1.0), static_cast<float>(2.0 * (g + m) - 1.0),
          static_cast<float>(2.0 * (b + m) - 1.0)};
}

double segment_distance(Point2 p, Point2 a, Point2 b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

bool inside_polygon(Point2 p, const std::array<Point2, 4>& q) {
  bool in = false;
  for (int i = 0, j = 3; i < 4; j = i++) {
    if ((q[i].y > p.y) != (q[j].y > p.y) &&
        p.x < (q[j].x - q[i].x) * (p.y - q[i].y) / (q[j].y - q[i].y) + q[i].x)
      in = !in;
  }
  return in;
}

Point2 at(const Keypoints& kp, JointId j) { return {kp[j].x, kp[j].y}; }

}  // namespace

void ToyFigureSpec::validate() const {
  if (image_size < 32 || image_size % 32 != 0)
    throw InvalidInput("toy image_size must be a multiple of 32, got " + std::to_string(image_size));
  if (persons < 0) throw InvalidInput("toy persons must be >= 0");
  for (double v : {torso, shoulder_half, hip_half, neck, head_radius, upper_arm, lower_arm, upper_leg, lower_leg,
                   arm_radius, leg_radius, cycle_frames})
    if (!(v > 0.0)) throw InvalidInput("toy figure lengths must be positive");
  if (!(motion >= 0.0) || !(drift >= 0.0)) throw InvalidInput("toy motion and drift must be >= 0");
}

nlohmann::json ToyFigureSpec::to_json() const {
  return {{"image_size", image_size}, {"seed", seed},       {"persons", persons},
          {"torso", torso},           {"shoulder_half", shoulder_half}, {"hip_half", hip_half},
          {"neck", neck},             {"head_radius", head_radius},     {"upper_arm", upper_arm},
          {"lower_arm", lower_arm},   {"upper_leg", upper_leg},         {"lower_leg", lower_leg},
          {"arm_radius", arm_radius}, {"leg_radius", leg_radius},       {"motion", motion},
          {"drift", drift},           {"cycle_frames", cycle_frames}};
}

ToyFigureSpec ToyFigureSpec::from_json(const nlohmann::json& j) {
  ToyFigureSpec s;
  s.image_size = j.value("image_size", s.image_size);
  s.seed = j.value("seed", s.seed);
  s.persons = j.value("persons", s.persons);
  s.torso = j.value("torso", s.torso);
  s.shoulder_half = j.value("shoulder_half", s.shoulder_half);
  s.hip_half = j.value("hip_half", s.hip_half);
  s.neck = j.value("neck", s.neck);
  s.head_radius = j.value("head_radius", s.head_radius);
  s.upper_arm = j.value("upper_arm", s.upper_arm);
  s.lower_arm = j.value("lower_arm", s.lower_arm);
  s.upper_leg = j.value("upper_leg", s.upper_leg);
  s.lower_leg = j.value("lower_leg", s.lower_leg);
  s.arm_radius = j.value("arm_radius", s.arm_radius);
  s.leg_radius = j.value("leg_radius", s.leg_radius);
  s.motion = j.value("motion", s.motion);
  s.drift = j.value("drift", s.drift);
  s.cycle_frames = j.value("cycle_frames", s.cycle_frames);
  s.validate();
  return s;
}

ToyVideo make_toy_video(const ToyFigureSpec& spec, int video_index) {
  spec.validate();
  const int person = spec.persons > 0 ? video_index % spec.persons : video_index;
  char buf[32];
  ToyVideo v;
  std::snprintf(buf, sizeof buf, "v%03d", video_index);
  v.id = buf;
  std::snprintf(buf, sizeof buf, "p%03d", person);
  v.person_id = buf;

  std::mt19937_64 prng(derive_seed(spec.seed, 0x10000 + static_cast<std::uint64_t>(person)));
  const double hue0 = uniform01(prng);
  for (int p = 0; p < kNumParts; ++p) {
    const double h = hue0 + 0.618033988749895 * p;
    v.part_rgb[p] = hsv(h, uniform_range(prng, 0.75, 1.0), uniform_range(prng, 0.8, 1.0));
  }

  std::mt19937_64 vrng(derive_seed(spec.seed, 0x20000 + static_cast<std::uint64_t>(video_index)));
  v.bg_base = hsv(uniform01(vrng), uniform_range(vrng, 0.2, 0.5), uniform_range(vrng, 0.3, 0.55));
  const double k = 2.0 * kPi / spec.image_size;
  for (auto& w : v.bg_waves) {
    const double angle = uniform_range(vrng, 0.0, 2.0 * kPi);
    const double freq = uniform_range(vrng, 0.3, 1.0) * k;
    w = {uniform_range(vrng, 0.1, 0.25), freq * std::cos(angle), freq * std::sin(angle),
         uniform_range(vrng, 0.0, 2.0 * kPi), 0.0};
  }
  for (std::size_t d = 0; d < v.phase.size(); ++d) {
    v.phase[d] = uniform_range(vrng, 0.0, 2.0 * kPi);
    v.rate[d] = uniform_range(vrng, 0.6, 1.4);
  }
  return v;
}

Keypoints toy_pose(const ToyFigureSpec& spec, const ToyVideo& video, int frame) {
  const double S = spec.image_size;
  std::array<double, 12> q{};
  for (int d = 0; d < 12; ++d) {
    const double amp = kMotion[d][1] * (d >= RootX ? 1.0 : spec.motion);
    q[d] = kMotion[d][0] + amp * std::sin(2.0 * kPi * video.rate[d] * frame / spec.cycle_frames + video.phase[d]);
  }
  const double lean = q[Lean];
  const Point2 up = dir(kPi + lean), perp{std::cos(lean), -std::sin(lean)};
  const Point2 pelvis{0.5 * S + spec.drift * S * q[RootX], 0.58 * S + 0.1 * spec.drift * S * q[RootY]};
  const Point2 neck = add(pelvis, up, spec.torso * S);
  const Point2 head = add(neck, dir(kPi + lean + q[Tilt]), spec.neck * S);
  const Point2 lsh = add(neck, perp, spec.shoulder_half * S), rsh = add(neck, perp, -spec.shoulder_half * S);
  const Point2 lhip = add(pelvis, perp, spec.hip_half * S), rhip = add(pelvis, perp, -spec.hip_half * S);
  const double ls = lean + q[LShoulder], rs = lean - q[RShoulder];
  const Point2 lel = add(lsh, dir(ls), spec.upper_arm * S), rel = add(rsh, dir(rs), spec.upper_arm * S);
  const Point2 lwr = add(lel, dir(ls + q[LElbow]), spec.lower_arm * S);
  const Point2 rwr = add(rel, dir(rs - q[RElbow]), spec.lower_arm * S);
  const double lh = q[LHip], rh = -q[RHip];
  const Point2 lkn = add(lhip, dir(lh), spec.upper_leg * S), rkn = add(rhip, dir(rh), spec.upper_leg * S);
  const Point2 lan = add(lkn, dir(lh - q[LKnee]), spec.lower_leg * S);
  const Point2 ran = add(rkn, dir(rh + q[RKnee]), spec.lower_leg * S);

  const std::array<Point2, kNumJoints> pts = {head, neck, lsh, rsh, lel, rel, lwr, rwr, lhip, rhip, lkn, rkn, lan, ran};
  // Shift the whole figure so every shape stays inside the frame.
  double x0 = 1e30, x1 = -1e30, y0 = 1e30, y1 = -1e30;
  for (int j = 0; j < kNumJoints; ++j) {
    const double r = (j == 0 ? spec.head_radius : std::max(spec.arm_radius, spec.leg_radius)) * S + 1.5;
    x0 = std::min(x0, pts[j].x - r);
    x1 = std::max(x1, pts[j].x + r);
    y0 = std::min(y0, pts[j].y - r);
    y1 = std::max(y1, pts[j].y + r);
  }
  const double hi = S - 1.0;
  const double sx = x0 < 0.0 ? -x0 : (x1 > hi ? hi - x1 : 0.0);
  const double sy = y0 < 0.0 ? -y0 : (y1 > hi ? hi - y1 : 0.0);
  Keypoints kp;
  for (int j = 0; j < kNumJoints; ++j) kp.joints[j] = {pts[j].x + sx, pts[j].y + sy, true};
  return kp;
}

ToyFrame render_toy_frame(const ToyFigureSpec& spec, const ToyVideo& video, int frame) {
  using J = JointId;
  const int S = spec.image_size;
  ToyFrame out;
  out.pose = toy_pose(spec, video, frame);
  out.image = Tensor<float>(1, 3, S, S);
  const Keypoints& kp = out.pose;
  const double ar = spec.arm_radius * S, lr = spec.leg_radius * S, hr = spec.head_radius * S;
  const std::array<Point2, 4> torso = {at(kp, J::LeftShoulder), at(kp, J::RightShoulder), at(kp, J::RightHip),
                                       at(kp, J::LeftHip)};
  const auto& scheme = part_scheme();

  for (auto& c : out.coverage) c.assign(static_cast<std::size_t>(S) * S, 0);
  auto covered = [&](int part, Point2 p) {
    const auto& joints = scheme.parts[part].joints;
    if (part == kNumParts - 1) return inside_polygon(p, torso);
    const Point2 a = at(kp, joints[0]), b = at(kp, joints[1]);
    if (part == 0) return std::hypot(p.x - a.x, p.y - a.y) <= hr || segment_distance(p, a, b) <= ar;
    return segment_distance(p, a, b) <= (part >= 5 ? lr : ar);
  };
  // Painter's order: torso, legs, head, arms.
  constexpr std::array<int, kNumParts> order = {9, 5, 6, 7, 8, 0, 1, 2, 3, 4};

  for (int y = 0; y < S; ++y)
    for (int x = 0; x < S; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * S + x;
      std::array<float, 3> rgb{};
      for (int c = 0; c < 3; ++c) {
        const auto& w = video.bg_waves[c];
        rgb[c] = video.bg_base[c] + static_cast<float>(w[0] * std::cos(w[1] * x + w[2] * y + w[3]));
      }
      for (int part : order) {
        if (!covered(part, {static_cast<double>(x), static_cast<double>(y)})) continue;
        out.coverage[part][i] = 1;
        rgb = video.part_rgb[part];
      }
      for (int c = 0; c < 3; ++c) out.image.plane(0, c)[i] = std::clamp(rgb[c], -1.0f, 1.0f);
    }
  return out;
}

DatasetManifest generate_toy_dataset(const ToyFigureSpec& spec, int n_videos, int frames_per_video,
                                     const std::filesystem::path& out) {
  spec.validate();
  if (n_videos < 1 || frames_per_video < 1) throw InvalidInput("toy dataset needs at least one video and frame");
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw IoError(out.string() + ": cannot create directory: " + ec.message());
  DatasetManifest m;
  m.root = out;
  m.image_size = spec.image_size;
  for (int v = 0; v < n_videos; ++v) {
    const ToyVideo video = make_toy_video(spec, v);
    VideoRecord rec{video.id, video.person_id, "toy", {}};
    for (int f = 0; f < frames_per_video; ++f) {
      char name[32];
      std::snprintf(name, sizeof name, "frame_%04d", f);
      const std::string base = video.id + "/" + name;
      const ToyFrame fr = render_toy_frame(spec, video, f);
      write_image(out / (base + ".png"), fr.image);
      write_keypoints(out / (base + ".json"), fr.pose);
      rec.frames.push_back({f, base + ".png", base + ".json", fr.pose});
    }
    m.videos.push_back(std::move(rec));
  }
  write_manifest(out / "manifest.json", m);
  return m;
}

}  // namespace posesynth
