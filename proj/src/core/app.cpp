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
#include "core/app.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string_view>

#include "core/checkpoint.hpp"
#include "core/data/image_io.hpp"

namespace posesynth {

namespace {

std::string numbered(const char* stem, int i, const char* ext = ".png") {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%02d%s", stem, i, ext);
  return buf;
}

// Single channel in [0, 1] as a grey [1, 3, H, W] image in [-1, 1].
Tensor<float> grey(const Tensor<float>& t, int channel) {
  Tensor<float> out(1, 3, t.h(), t.w());
  const float* s = t.plane(0, channel);
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < out.shape().plane(); ++i) out.plane(0, c)[i] = 2.0f * s[i] - 1.0f;
  return out;
}

Tensor<float> tile(const std::vector<Tensor<float>>& tiles, int columns) {
  const int h = tiles.front().h(), w = tiles.front().w();
  const int rows = (static_cast<int>(tiles.size()) + columns - 1) / columns;
  Tensor<float> grid(1, 3, rows * h, columns * w, -1.0f);
  for (std::size_t k = 0; k < tiles.size(); ++k) {
    const int r = static_cast<int>(k) / columns, c = static_cast<int>(k) % columns;
    for (int ch = 0; ch < 3; ++ch)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) grid.at(0, ch, r * h + y, c * w + x) = tiles[k].at(0, ch, y, x);
  }
  return grid;
}

constexpr float kPalette[kNumLayers][3] = {
    {0.90f, 0.80f, 0.20f}, {0.90f, 0.20f, 0.20f}, {0.20f, 0.40f, 0.90f}, {0.95f, 0.55f, 0.55f},
    {0.55f, 0.70f, 0.95f}, {0.20f, 0.75f, 0.30f}, {0.70f, 0.30f, 0.80f}, {0.60f, 0.90f, 0.60f},
    {0.85f, 0.60f, 0.95f}, {0.95f, 0.60f, 0.20f}, {0.10f, 0.10f, 0.10f}};

}  // namespace

GeneratorOutput<float> synthesize(const Model& model, const Tensor<float>& source, const Keypoints& source_pose,
                                  const Keypoints& target_pose, std::uint64_t seed) {
  const int r = model.config.resolution;
  if (source.h() != r || source.w() != r)
    throw InvalidInput("source image is " + std::to_string(source.w()) + "x" + std::to_string(source.h()) +
                       ", model resolution is " + std::to_string(r));
  std::mt19937_64 rng(seed);
  const std::vector<GeneratorInput<float>> batch{{take_sample(source, 0), source_pose, target_pose}};
  return generator_forward<float>(model.nets, model.config, batch, rng);
}

std::vector<GeneratorOutput<float>> synthesize_video(const Model& model, const Tensor<float>& source,
                                                     const Keypoints& source_pose,
                                                     std::span<const Keypoints> poses, std::uint64_t seed) {
  if (poses.empty()) throw InvalidInput("video synthesis needs at least one target pose");
  std::vector<GeneratorOutput<float>> frames;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    try {
      frames.push_back(synthesize(model, source, source_pose, poses[i], seed));
    } catch (const Error& e) {
      throw InvalidInput("frame " + std::to_string(i) + ": " + e.what());
    }
  }
  return frames;
}

void dump_intermediates(const std::filesystem::path& dir, const GeneratorOutput<float>& out) {
  std::filesystem::create_directories(dir);
  std::vector<Tensor<float>> tiles;
  for (int l = 0; l < kNumLayers; ++l) {
    write_unit_image(dir / numbered("mask", l), out.masks, l);
    tiles.push_back(grey(out.masks, l));
  }
  for (int l = 0; l < kNumParts; ++l) {
    Tensor<float> w = slice_channels(take_sample(out.warped, 0), 3 * l, 3);
    write_image(dir / numbered("warped", l), w);
    tiles.push_back(std::move(w));
  }
  write_image(dir / "foreground.png", out.foreground);
  write_unit_image(dir / "target_mask.png", out.target_mask);
  write_image(dir / "background_input.png", out.background_input);
  write_image(dir / "background.png", out.background);
  write_image(dir / "output.png", out.image);
  tiles.push_back(take_sample(out.foreground, 0));
  tiles.push_back(grey(out.target_mask, 0));
  tiles.push_back(take_sample(out.background_input, 0));
  tiles.push_back(take_sample(out.background, 0));
  tiles.push_back(take_sample(out.image, 0));
  write_image(dir / "intermediates.png", tile(tiles, 11));
}

Tensor<float> segmentation_visual(const Tensor<float>& masks) {
  Tensor<float> out(1, 3, masks.h(), masks.w());
  for (std::size_t i = 0; i < masks.shape().plane(); ++i) {
    int best = 0;
    for (int l = 1; l < masks.c(); ++l)
      if (masks.plane(0, l)[i] > masks.plane(0, best)[i]) best = l;
    for (int c = 0; c < 3; ++c) out.plane(0, c)[i] = 2.0f * kPalette[best % kNumLayers][c] - 1.0f;
  }
  return out;
}

Tensor<float> segment_to_dir(const Model& model, const Tensor<float>& source, const Keypoints& source_pose,
                             const std::filesystem::path& dir) {
  const auto out = synthesize(model, source, source_pose, source_pose, 0);
  std::filesystem::create_directories(dir);
  for (int l = 0; l < kNumLayers; ++l) write_unit_image(dir / numbered("mask", l), out.masks, l);
  write_image(dir / "segmentation.png", segmentation_visual(out.masks));
  return out.masks;
}

std::string tensor_hash(const Tensor<float>& t) {
  return hex64(fnv1a64(std::string_view(reinterpret_cast<const char*>(t.data()), t.size() * sizeof(float))));
}

EvalReport evaluate(const Model& model, const DatasetManifest& data, const std::vector<std::string>& videos,
                    std::uint64_t seed) {
  if (data.image_size != model.config.resolution)
    throw InvalidInput("dataset image size " + std::to_string(data.image_size) + " does not match model resolution " +
                       std::to_string(model.config.resolution));
  std::vector<const VideoRecord*> selected;
  for (const auto& v : data.videos)
    if (videos.empty() || std::find(videos.begin(), videos.end(), v.id) != videos.end()) selected.push_back(&v);
  if (selected.empty()) throw InvalidInput("evaluation selected no videos");

  EvalReport rep;
  rep.seed = seed;
  std::vector<Tensor<float>> gt_images;
  for (const auto* v : selected)
    for (std::size_t f = 1; f < v->frames.size(); ++f) gt_images.push_back(load_frame_image(data, v->frames[f]));
  if (gt_images.empty()) throw InvalidInput("evaluation videos have no target frames");

  FeatureExtractor<float> phi;
  if (model.features && model.features->fitted()) {
    phi = *model.features;
    rep.feature_stats_source = "checkpoint";
  } else {
    phi = model.features ? *model.features
                         : FeatureExtractor<float>::random_fixed(model.seed, model.config.width_divisor());
    phi.fit_stats(gt_images);
    rep.feature_stats_source = "evaluation ground truth";
  }

  std::vector<Tensor<double>> outs_unit, gts_unit;
  std::vector<double> l1, vgg, ssim, base;
  std::size_t k = 0;
  for (const auto* v : selected) {
    const Tensor<float> source = load_frame_image(data, v->frames.front());
    const Tensor<double> source_unit = to_unit(source);
    for (std::size_t f = 1; f < v->frames.size(); ++f, ++k) {
      const Tensor<float>& gt = gt_images[k];
      const auto out = synthesize(model, source, v->frames.front().pose, v->frames[f].pose, seed);
      const Tensor<double> y = to_unit(out.image), t = to_unit(gt);
      EvalExample ex{v->id, v->frames.front().index, v->frames[f].index, metric_l1(y, t), phi.loss(out.image, gt),
                     metric_ssim(y, t), metric_l1(source_unit, t)};
      l1.push_back(ex.l1);
      vgg.push_back(ex.vgg);
      ssim.push_back(ex.ssim);
      base.push_back(ex.baseline_l1);
      rep.examples.push_back(std::move(ex));
      outs_unit.push_back(y);
      gts_unit.push_back(t);
    }
  }
  rep.l1 = mean_std(l1);
  rep.vgg = mean_std(vgg);
  rep.ssim = mean_std(ssim);
  rep.baseline_l1 = mean_std(base);
  rep.histogram_model = gradient_histogram(outs_unit, gts_unit);
  rep.histogram_gt = gradient_histogram(gts_unit, gts_unit);
  return rep;
}

void write_eval_csv(const std::filesystem::path& path, const EvalReport& r) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError(path.string() + ": cannot write evaluation CSV");
  out << "video,source_frame,target_frame,l1,vgg,ssim,baseline_l1\n";
  char buf[160];
  for (const auto& e : r.examples) {
    std::snprintf(buf, sizeof buf, "%d,%d,%.9g,%.9g,%.9g,%.9g", e.source_frame, e.target_frame, e.l1, e.vgg, e.ssim,
                  e.baseline_l1);
    out << e.video << ',' << buf << "\n";
  }
  if (!out) throw IoError(path.string() + ": write failed");
}

std::string eval_summary(const EvalReport& r) {
  std::ostringstream os;
  char buf[200];
  os << "examples " << r.examples.size() << "\n";
  std::snprintf(buf, sizeof buf, "l1          %.6f (%.6f)\nvgg_error   %.6f (%.6f)\nssim        %.6f (%.6f)\n",
                r.l1.mean, r.l1.std, r.vgg.mean, r.vgg.std, r.ssim.mean, r.ssim.std);
  os << buf;
  std::snprintf(buf, sizeof buf, "baseline_l1 %.6f (%.6f)  [copy source to target]\n", r.baseline_l1.mean,
                r.baseline_l1.std);
  os << buf;
  std::snprintf(buf, sizeof buf, "gradient_histogram model %.4f %.4f %.4f %.4f\n", r.histogram_model[0],
                r.histogram_model[1], r.histogram_model[2], r.histogram_model[3]);
  os << buf;
  std::snprintf(buf, sizeof buf, "gradient_histogram truth %.4f %.4f %.4f %.4f\n", r.histogram_gt[0],
                r.histogram_gt[1], r.histogram_gt[2], r.histogram_gt[3]);
  os << buf;
  os << "feature_stats " << r.feature_stats_source << "\n";
  os << "reference values for the original 256x256 video dataset (not comparable to toy data):\n"
        "  layered model  l1 0.034 (0.018)  vgg 0.200 (0.092)  ssim 0.863 (0.105)\n"
        "  unet           l1 0.038 (0.018)  vgg 0.215 (0.091)  ssim 0.847 (0.103)\n";
  return os.str();
}

nlohmann::json eval_json(const EvalReport& r) {
  auto ms = [](const MeanStd& m) { return nlohmann::json{{"mean", m.mean}, {"std", m.std}}; };
  return {{"examples", r.examples.size()},     {"seed", r.seed},
          {"l1", ms(r.l1)},                    {"vgg_error", ms(r.vgg)},
          {"ssim", ms(r.ssim)},                {"baseline_l1", ms(r.baseline_l1)},
          {"histogram_model", r.histogram_model}, {"histogram_truth", r.histogram_gt},
          {"feature_stats", r.feature_stats_source}};
}

}  // namespace posesynth
