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
// Command-line front end over the C API.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "posesynth/posesynth.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Failure {
  posesynth_status status;
};

void check(posesynth_status s) {
  if (s != POSESYNTH_OK) throw Failure{s};
}

struct Shared {
  std::string config, checkpoint, out, loss_mode, feature_profile, vgg19;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int resolution = 0;
  bool dump = false;
};

void add_shared(CLI::App* app, Shared& s) {
  app->add_option("--config", s.config, "JSON config file")->check(CLI::ExistingFile);
  app->add_option("--seed", s.seed, "Random seed")->each([&s](const std::string&) { s.seed_set = true; });
  app->add_option("--checkpoint", s.checkpoint, "Model checkpoint");
  app->add_option("--out", s.out, "Output path");
  app->add_option("--resolution", s.resolution, "Image resolution (multiple of 32)")->check(CLI::PositiveNumber);
  app->add_option("--loss-mode", s.loss_mode, "Training loss")->check(CLI::IsMember({"l1", "vgg", "vgg+gan"}));
  app->add_option("--feature-profile", s.feature_profile, "Feature network for the perceptual loss")
      ->check(CLI::IsMember({"vgg19", "random-fixed"}));
  app->add_flag("--dump-intermediates", s.dump, "Write every intermediate of the generator");
  app->add_option("--vgg19-weights", s.vgg19, "Converted VGG19 weight file");
}

// Flags that a subcommand accepts for uniformity but does not use.
void warn_unused(const CLI::App* app, const std::vector<std::string>& names) {
  for (const auto& n : names)
    if (app->count(n) > 0) std::cerr << "warning: " << n << " has no effect on '" << app->get_name() << "'\n";
}

json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error(path + ": cannot open");
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

struct ModelHandle {
  posesynth_model* p = nullptr;
  ModelHandle() = default;
  ModelHandle(const ModelHandle&) = delete;
  ModelHandle& operator=(const ModelHandle&) = delete;
  ~ModelHandle() { posesynth_model_free(p); }
};

void load(ModelHandle& m, const Shared& s) {
  if (s.checkpoint.empty()) throw std::runtime_error("--checkpoint is required");
  check(posesynth_model_load(s.checkpoint.c_str(), s.vgg19.empty() ? nullptr : s.vgg19.c_str(), &m.p));
  if (s.resolution > 0) {
    int r = 0;
    check(posesynth_model_resolution(m.p, &r));
    if (r != s.resolution)
      throw std::runtime_error("--resolution " + std::to_string(s.resolution) + " does not match the checkpoint (" +
                               std::to_string(r) + ")");
  }
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

// ------------------------------------------------------------------- train

struct TrainArgs {
  std::string manifest, profile = "full", log_csv;
  std::int64_t steps = 0;
  int batch = 0, log_every = 50;
  double lr = 0.0;
};

int progress(int64_t step, double l1, double vgg, double gan_g, double gan_d, double combined, void* user) {
  const int every = *static_cast<int*>(user);
  if (every > 0 && step % every == 0) {
    auto v = [](double x) { return std::isnan(x) ? std::string("-") : std::to_string(x); };
    std::cerr << "step " << step << "  l1 " << v(l1) << "  vgg " << v(vgg) << "  gan_g " << v(gan_g) << "  gan_d "
              << v(gan_d) << "  combined " << v(combined) << "\n";
  }
  return 1;
}

void run_train(const CLI::App* app, const Shared& s, TrainArgs& a) {
  warn_unused(app, {"--dump-intermediates"});
  const char* defaults = nullptr;
  check(posesynth_default_train_config(a.profile == "desk", &defaults));
  json cfg = json::parse(defaults);
  if (!s.config.empty()) cfg.merge_patch(read_json_file(s.config));
  if (s.seed_set) cfg["seed"] = s.seed;
  if (s.resolution > 0) cfg["generator"]["resolution"] = s.resolution;
  if (!s.loss_mode.empty()) cfg["loss_mode"] = s.loss_mode;
  if (!s.feature_profile.empty()) cfg["feature_profile"] = s.feature_profile;
  if (!s.vgg19.empty()) cfg["vgg19_weights"] = s.vgg19;
  if (a.steps > 0) cfg["max_steps"] = a.steps;
  if (a.batch > 0) cfg["batch_size"] = a.batch;
  if (a.lr > 0.0) cfg["learning_rate"] = a.lr;

  const std::string out = s.out.empty() ? "model.ckpt" : s.out;
  posesynth_train_options opts;
  posesynth_train_options_init(&opts);
  opts.checkpoint_out = out.c_str();
  opts.log_csv = a.log_csv.empty() ? nullptr : a.log_csv.c_str();
  opts.warm_start = s.checkpoint.empty() ? nullptr : s.checkpoint.c_str();
  opts.progress = progress;
  opts.user = &a.log_every;
  ModelHandle m;
  check(posesynth_train(cfg.dump().c_str(), a.manifest.c_str(), &opts, &m.p));
  const char* test = nullptr;
  check(posesynth_model_test_videos(m.p, &test));
  std::cout << "checkpoint " << out << "\nheld-out videos " << test << "\n";
}

// ------------------------------------------------------------------- synth

struct SynthArgs {
  std::string source, source_pose, target_pose, poses_dir;
  std::vector<std::string> poses;
};

std::string dump_dir_for(const std::string& out) {
  const fs::path p(out);
  return (p.parent_path() / (p.stem().string() + "_intermediates")).string();
}

void run_synth(const CLI::App* app, const Shared& s, const SynthArgs& a) {
  warn_unused(app, {"--loss-mode", "--feature-profile", "--config"});
  ModelHandle m;
  load(m, s);
  const std::string out = s.out.empty() ? "synth.png" : s.out;
  const std::string dump = s.dump ? dump_dir_for(out) : std::string();
  check(posesynth_synth(m.p, a.source.c_str(), a.source_pose.c_str(), a.target_pose.c_str(), s.seed, out.c_str(),
                        s.dump ? dump.c_str() : nullptr));
  std::cout << out << "\n";
  if (s.dump) std::cout << dump << "\n";
}

void run_synth_video(const CLI::App* app, const Shared& s, const SynthArgs& a) {
  warn_unused(app, {"--loss-mode", "--feature-profile", "--config"});
  std::vector<std::string> poses = a.poses;
  if (!a.poses_dir.empty()) {
    std::vector<std::string> found;
    for (const auto& e : fs::directory_iterator(a.poses_dir))
      if (e.is_regular_file() && e.path().extension() == ".json") found.push_back(e.path().string());
    std::sort(found.begin(), found.end());
    poses.insert(poses.end(), found.begin(), found.end());
  }
  if (poses.empty()) throw std::runtime_error("no target poses given (use --poses or --poses-dir)");
  std::vector<const char*> ptrs;
  for (const auto& p : poses) ptrs.push_back(p.c_str());
  ModelHandle m;
  load(m, s);
  const std::string out = s.out.empty() ? "video" : s.out;
  check(posesynth_synth_video(m.p, a.source.c_str(), a.source_pose.c_str(), ptrs.data(), ptrs.size(), s.seed,
                              out.c_str(), s.dump ? 1 : 0));
  std::cout << poses.size() << " frames in " << out << "\n";
}

void run_segment(const CLI::App* app, const Shared& s, const SynthArgs& a) {
  warn_unused(app, {"--loss-mode", "--feature-profile", "--config", "--seed", "--dump-intermediates"});
  ModelHandle m;
  load(m, s);
  const std::string out = s.out.empty() ? "segmentation" : s.out;
  check(posesynth_segment(m.p, a.source.c_str(), a.source_pose.c_str(), out.c_str()));
  std::cout << out << "\n";
}

// -------------------------------------------------------------------- eval

struct EvalArgs {
  std::string manifest, videos, split = "test";
};

void run_eval(const CLI::App* app, const Shared& s, const EvalArgs& a) {
  warn_unused(app, {"--loss-mode", "--dump-intermediates", "--config"});
  ModelHandle m;
  load(m, s);
  std::vector<std::string> ids = split_csv(a.videos);
  if (ids.empty() && a.split == "test") {
    const char* test = nullptr;
    check(posesynth_model_test_videos(m.p, &test));
    ids = split_csv(test);
    if (ids.empty()) std::cerr << "warning: checkpoint has no held-out split; evaluating every video\n";
  }
  std::vector<const char*> ptrs;
  for (const auto& id : ids) ptrs.push_back(id.c_str());
  posesynth_eval_report* rep = nullptr;
  check(posesynth_eval(m.p, a.manifest.c_str(), ptrs.data(), ptrs.size(), s.seed, &rep));
  struct Free {
    posesynth_eval_report* r;
    ~Free() { posesynth_eval_report_free(r); }
  } guard{rep};
  const fs::path dir = s.out.empty() ? fs::path("eval") : fs::path(s.out);
  fs::create_directories(dir);
  check(posesynth_eval_report_write_csv(rep, (dir / "examples.csv").string().c_str()));
  const char* text = nullptr;
  const char* doc = nullptr;
  check(posesynth_eval_report_summary(rep, &text));
  check(posesynth_eval_report_json(rep, &doc));
  std::ofstream(dir / "summary.txt") << text;
  std::ofstream(dir / "report.json") << doc << "\n";
  std::cout << text;
}

// ------------------------------------------------------------------ toygen

struct ToyArgs {
  int videos = 8, frames = 30, persons = -1;
};

void run_toygen(const CLI::App* app, const Shared& s, const ToyArgs& a) {
  warn_unused(app, {"--loss-mode", "--feature-profile", "--checkpoint", "--dump-intermediates"});
  json spec = s.config.empty() ? json::object() : read_json_file(s.config);
  if (s.seed_set) spec["seed"] = s.seed;
  if (s.resolution > 0) spec["image_size"] = s.resolution;
  if (a.persons >= 0) spec["persons"] = a.persons;
  const std::string out = s.out.empty() ? "toy" : s.out;
  check(posesynth_toygen(spec.dump().c_str(), a.videos, a.frames, out.c_str()));
  std::cout << (fs::path(out) / "manifest.json").string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pose-guided human image synthesis"};
  app.require_subcommand(1);
  app.set_version_flag("--version", posesynth_version());

  Shared shared;
  TrainArgs train;
  SynthArgs synth;
  EvalArgs eval;
  ToyArgs toy;

  auto* c_train = app.add_subcommand("train", "Train a model on a dataset manifest");
  add_shared(c_train, shared);
  c_train->add_option("--manifest", train.manifest, "Dataset manifest")->required()->check(CLI::ExistingFile);
  c_train->add_option("--profile", train.profile, "Base configuration")->check(CLI::IsMember({"full", "desk"}));
  c_train->add_option("--steps", train.steps, "Override max_steps")->check(CLI::PositiveNumber);
  c_train->add_option("--batch-size", train.batch, "Override batch_size")->check(CLI::PositiveNumber);
  c_train->add_option("--learning-rate", train.lr, "Override learning_rate")->check(CLI::PositiveNumber);
  c_train->add_option("--log", train.log_csv, "Append per-step losses to this CSV");
  c_train->add_option("--log-every", train.log_every, "Progress line interval (0: quiet)");

  auto* c_synth = app.add_subcommand("synth", "Render a source image in a target pose");
  add_shared(c_synth, shared);
  c_synth->add_option("--source", synth.source, "Source image")->required()->check(CLI::ExistingFile);
  c_synth->add_option("--source-pose", synth.source_pose, "Source keypoints")->required()->check(CLI::ExistingFile);
  c_synth->add_option("--target-pose", synth.target_pose, "Target keypoints")->required()->check(CLI::ExistingFile);

  auto* c_video = app.add_subcommand("synth-video", "Render a source image along a pose sequence");
  add_shared(c_video, shared);
  c_video->add_option("--source", synth.source, "Source image")->required()->check(CLI::ExistingFile);
  c_video->add_option("--source-pose", synth.source_pose, "Source keypoints")->required()->check(CLI::ExistingFile);
  c_video->add_option("--poses", synth.poses, "Target keypoint files, in order")->check(CLI::ExistingFile);
  c_video->add_option("--poses-dir", synth.poses_dir, "Directory of keypoint files, sorted by name")
      ->check(CLI::ExistingDirectory);

  auto* c_segment = app.add_subcommand("segment", "Write the layer masks of a source image");
  add_shared(c_segment, shared);
  c_segment->add_option("--source", synth.source, "Source image")->required()->check(CLI::ExistingFile);
  c_segment->add_option("--source-pose", synth.source_pose, "Source keypoints")->required()->check(CLI::ExistingFile);

  auto* c_eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  add_shared(c_eval, shared);
  c_eval->add_option("--manifest", eval.manifest, "Dataset manifest")->required()->check(CLI::ExistingFile);
  c_eval->add_option("--videos", eval.videos, "Comma-separated video ids (overrides --split)");
  c_eval->add_option("--split", eval.split, "Videos to evaluate")->check(CLI::IsMember({"test", "all"}));

  auto* c_toy = app.add_subcommand("toygen", "Generate a synthetic articulated-figure dataset");
  add_shared(c_toy, shared);
  c_toy->add_option("--videos", toy.videos, "Number of videos")->check(CLI::PositiveNumber);
  c_toy->add_option("--frames", toy.frames, "Frames per video")->check(CLI::PositiveNumber);
  c_toy->add_option("--persons", toy.persons, "Distinct figures (0: one per video)")->check(CLI::NonNegativeNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_train->parsed()) run_train(c_train, shared, train);
    if (c_synth->parsed()) run_synth(c_synth, shared, synth);
    if (c_video->parsed()) run_synth_video(c_video, shared, synth);
    if (c_segment->parsed()) run_segment(c_segment, shared, synth);
    if (c_eval->parsed()) run_eval(c_eval, shared, eval);
    if (c_toy->parsed()) run_toygen(c_toy, shared, toy);
  } catch (const Failure& f) {
    std::cerr << "error: " << posesynth_status_name(f.status) << ": " << posesynth_last_error() << "\n";
    return 10 + static_cast<int>(f.status);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
