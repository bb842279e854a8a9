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
#include "posesynth/posesynth.h"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "core/app.hpp"
#include "core/data/image_io.hpp"
#include "core/data/toy.hpp"
#include "core/training.hpp"

struct posesynth_model {
  posesynth::Model model;
  std::string info, test_videos;
};

struct posesynth_eval_report {
  posesynth::EvalReport report;
  std::string json, summary;
};

namespace {

using namespace posesynth;

thread_local std::string g_last_error;
thread_local std::string g_default_config;

posesynth_status fail(posesynth_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

// Runs `f`, mapping library exceptions onto status codes.
template <typename F>
posesynth_status guarded(F&& f) {
  try {
    f();
    return POSESYNTH_OK;
  } catch (const InvalidInput& e) {
    return fail(POSESYNTH_ERR_INVALID_INPUT, e.what());
  } catch (const DegenerateTransform& e) {
    return fail(POSESYNTH_ERR_DEGENERATE, e.what());
  } catch (const InvalidState& e) {
    return fail(POSESYNTH_ERR_INVALID_STATE, e.what());
  } catch (const IoError& e) {
    return fail(POSESYNTH_ERR_IO, e.what());
  } catch (const DecodeError& e) {
    return fail(POSESYNTH_ERR_DECODE, e.what());
  } catch (const FingerprintMismatch& e) {
    return fail(POSESYNTH_ERR_FINGERPRINT, e.what());
  } catch (const NumericError& e) {
    return fail(POSESYNTH_ERR_NUMERIC, e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(POSESYNTH_ERR_INVALID_INPUT, std::string("json: ") + e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(POSESYNTH_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return fail(POSESYNTH_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(POSESYNTH_ERR_INTERNAL, "unknown error");
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw InvalidInput(std::string(what) + " must not be NULL");
}

nlohmann::json parse_json(const char* text, const char* what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput(std::string(what) + ": " + e.what());
  }
}

Keypoints pose_from_floats(const float* p) {
  Keypoints kp;
  for (int j = 0; j < kNumJoints; ++j)
    kp.joints[j] = Joint{p[3 * j], p[3 * j + 1], p[3 * j + 2] != 0.0f};
  kp.validate();
  return kp;
}

std::string frame_name(std::size_t i, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%04zu%s", i, ext);
  return buf;
}

}  // namespace

extern "C" {

const char* posesynth_version(void) { return "1.0.0"; }

const char* posesynth_status_name(posesynth_status status) {
  switch (status) {
    case POSESYNTH_OK: return "ok";
    case POSESYNTH_ERR_INVALID_INPUT: return "invalid input";
    case POSESYNTH_ERR_DEGENERATE: return "degenerate transform";
    case POSESYNTH_ERR_INVALID_STATE: return "invalid state";
    case POSESYNTH_ERR_IO: return "i/o error";
    case POSESYNTH_ERR_DECODE: return "decode error";
    case POSESYNTH_ERR_FINGERPRINT: return "fingerprint mismatch";
    case POSESYNTH_ERR_NUMERIC: return "numeric error";
    case POSESYNTH_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* posesynth_last_error(void) { return g_last_error.c_str(); }

posesynth_status posesynth_model_create(const char* generator_json, uint64_t seed, const char* init,
                                        posesynth_model** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    GeneratorConfig cfg;
    if (generator_json) cfg = GeneratorConfig::from_json(parse_json(generator_json, "generator config"));
    cfg.validate();
    TrainConfig tc;
    if (init) tc.init = init;
    *out = new posesynth_model{Model::create(cfg, seed, tc.init_scheme()), {}, {}};
  });
}

posesynth_status posesynth_model_load(const char* path, const char* vgg19_weights, posesynth_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    *out = new posesynth_model{load_model(path, vgg19_weights ? vgg19_weights : ""), {}, {}};
  });
}

posesynth_status posesynth_model_save(const posesynth_model* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    save_model(path, model->model);
  });
}

void posesynth_model_free(posesynth_model* model) { delete model; }

posesynth_status posesynth_model_resolution(const posesynth_model* model, int* out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    *out = model->model.config.resolution;
  });
}

posesynth_status posesynth_model_info(posesynth_model* model, const char** json) {
  return guarded([&] {
    require(model, "model");
    require(json, "json");
    const Model& m = model->model;
    nlohmann::json doc = {{"generator", m.config.to_json()},
                          {"generator_fingerprint", generator_fingerprint(m.config)},
                          {"loss_mode", loss_mode_name(m.mode)},
                          {"steps", m.steps},
                          {"seed", m.seed},
                          {"has_discriminator", m.discriminator.has_value()},
                          {"has_features", m.features.has_value()},
                          {"history", m.history}};
    model->info = doc.dump(2);
    *json = model->info.c_str();
  });
}

posesynth_status posesynth_model_test_videos(posesynth_model* model, const char** csv) {
  return guarded([&] {
    require(model, "model");
    require(csv, "csv");
    model->test_videos.clear();
    const auto& h = model->model.history;
    if (h.is_object() && h.contains("test_videos"))
      for (const auto& id : h["test_videos"]) {
        if (!model->test_videos.empty()) model->test_videos += ',';
        model->test_videos += id.get<std::string>();
      }
    *csv = model->test_videos.c_str();
  });
}

posesynth_status posesynth_generate(const posesynth_model* model, const float* source_rgb, const float* source_pose,
                                    const float* target_pose, uint64_t seed, float* out_rgb) {
  return guarded([&] {
    require(model, "model");
    require(source_rgb, "source_rgb");
    require(source_pose, "source_pose");
    require(target_pose, "target_pose");
    require(out_rgb, "out_rgb");
    const int r = model->model.config.resolution;
    Tensor<float> src(1, 3, r, r);
    std::memcpy(src.data(), source_rgb, src.size() * sizeof(float));
    const auto o = synthesize(model->model, src, pose_from_floats(source_pose), pose_from_floats(target_pose), seed);
    std::memcpy(out_rgb, o.image.data(), o.image.size() * sizeof(float));
  });
}

posesynth_status posesynth_synth(const posesynth_model* model, const char* source_image, const char* source_pose,
                                 const char* target_pose, uint64_t seed, const char* out_image, const char* dump_dir) {
  return guarded([&] {
    require(model, "model");
    require(source_image, "source_image");
    require(source_pose, "source_pose");
    require(target_pose, "target_pose");
    require(out_image, "out_image");
    const auto o = synthesize(model->model, read_image(source_image), read_keypoints(source_pose),
                              read_keypoints(target_pose), seed);
    write_image(out_image, o.image);
    if (dump_dir) dump_intermediates(dump_dir, o);
  });
}

posesynth_status posesynth_synth_video(const posesynth_model* model, const char* source_image,
                                       const char* source_pose, const char* const* target_poses, size_t n_poses,
                                       uint64_t seed, const char* out_dir, int dump) {
  return guarded([&] {
    require(model, "model");
    require(source_image, "source_image");
    require(source_pose, "source_pose");
    require(out_dir, "out_dir");
    if (n_poses == 0) throw InvalidInput("video synthesis needs at least one target pose");
    require(target_poses, "target_poses");
    std::vector<Keypoints> poses;
    for (size_t i = 0; i < n_poses; ++i) {
      require(target_poses[i], "target pose path");
      try {
        poses.push_back(read_keypoints(target_poses[i]));
      } catch (const Error& e) {
        throw InvalidInput("frame " + std::to_string(i) + ": " + e.what());
      }
    }
    const auto frames = synthesize_video(model->model, read_image(source_image), read_keypoints(source_pose), poses,
                                         seed);
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    nlohmann::json index = nlohmann::json::array();
    for (std::size_t i = 0; i < frames.size(); ++i) {
      write_image(dir / frame_name(i, ".png"), frames[i].image);
      if (dump) dump_intermediates(dir / frame_name(i, ""), frames[i]);
      index.push_back({{"file", frame_name(i, ".png")},
                       {"pose", target_poses[i]},
                       {"output_hash", tensor_hash(frames[i].image)},
                       {"background_hash", tensor_hash(frames[i].background)}});
    }
    std::ofstream f(dir / "frames.json");
    f << nlohmann::json{{"seed", seed}, {"frames", index}}.dump(2) << "\n";
    if (!f) throw IoError((dir / "frames.json").string() + ": write failed");
  });
}

posesynth_status posesynth_segment(const posesynth_model* model, const char* source_image, const char* source_pose,
                                   const char* out_dir) {
  return guarded([&] {
    require(model, "model");
    require(source_image, "source_image");
    require(source_pose, "source_pose");
    require(out_dir, "out_dir");
    segment_to_dir(model->model, read_image(source_image), read_keypoints(source_pose), out_dir);
  });
}

void posesynth_train_options_init(posesynth_train_options* opts) {
  if (opts) *opts = posesynth_train_options{nullptr, nullptr, nullptr, nullptr, nullptr};
}

posesynth_status posesynth_default_train_config(int desk, const char** json) {
  return guarded([&] {
    require(json, "json");
    g_default_config = (desk ? TrainConfig::desk() : TrainConfig{}).to_json().dump(2);
    *json = g_default_config.c_str();
  });
}

posesynth_status posesynth_train(const char* config_json, const char* manifest, const posesynth_train_options* opts,
                                 posesynth_model** out) {
  return guarded([&] {
    require(config_json, "config_json");
    require(manifest, "manifest");
    require(out, "out");
    *out = nullptr;
    const TrainConfig cfg = TrainConfig::from_json(parse_json(config_json, "training config"));
    const DatasetManifest data = load_dataset(manifest);
    TrainOptions o;
    if (opts) {
      if (opts->checkpoint_out) o.checkpoint_out = opts->checkpoint_out;
      if (opts->log_csv) o.log_csv = opts->log_csv;
      if (opts->warm_start) o.warm_start = opts->warm_start;
      if (opts->progress) {
        const posesynth_progress_fn fn = opts->progress;
        void* user = opts->user;
        o.progress = [fn, user](std::int64_t step, const LossReport& r) {
          return fn(step, r.l1, r.vgg, r.gan_g, r.gan_d, r.combined, user) != 0;
        };
      }
    }
    TrainResult res = train_model(cfg, data, o);
    *out = new posesynth_model{std::move(res.model), {}, {}};
  });
}

posesynth_status posesynth_eval(const posesynth_model* model, const char* manifest, const char* const* videos,
                                size_t n_videos, uint64_t seed, posesynth_eval_report** out) {
  return guarded([&] {
    require(model, "model");
    require(manifest, "manifest");
    require(out, "out");
    *out = nullptr;
    std::vector<std::string> ids;
    if (n_videos > 0) require(videos, "videos");
    for (size_t i = 0; i < n_videos; ++i) {
      require(videos[i], "video id");
      ids.emplace_back(videos[i]);
    }
    const DatasetManifest data = load_dataset(manifest);
    for (const auto& id : ids) (void)data.video(id);
    *out = new posesynth_eval_report{evaluate(model->model, data, ids, seed), {}, {}};
  });
}

void posesynth_eval_report_free(posesynth_eval_report* report) { delete report; }

posesynth_status posesynth_eval_report_examples(const posesynth_eval_report* report, size_t* out) {
  return guarded([&] {
    require(report, "report");
    require(out, "out");
    *out = report->report.examples.size();
  });
}

posesynth_status posesynth_eval_report_metric(const posesynth_eval_report* report, const char* metric, double* mean,
                                              double* std) {
  return guarded([&] {
    require(report, "report");
    require(metric, "metric");
    const EvalReport& r = report->report;
    const std::string name = metric;
    const MeanStd* m = name == "l1"            ? &r.l1
                       : name == "vgg_error"   ? &r.vgg
                       : name == "ssim"        ? &r.ssim
                       : name == "baseline_l1" ? &r.baseline_l1
                                               : nullptr;
    if (!m) throw InvalidInput("unknown metric '" + name + "' (expected l1, vgg_error, ssim or baseline_l1)");
    if (mean) *mean = m->mean;
    if (std) *std = m->std;
  });
}

posesynth_status posesynth_eval_report_histogram(const posesynth_eval_report* report, int which, double* bins) {
  return guarded([&] {
    require(report, "report");
    require(bins, "bins");
    if (which != 0 && which != 1) throw InvalidInput("histogram selector must be 0 (model) or 1 (ground truth)");
    const auto& h = which == 0 ? report->report.histogram_model : report->report.histogram_gt;
    for (int i = 0; i < 4; ++i) bins[i] = h[i];
  });
}

posesynth_status posesynth_eval_report_json(posesynth_eval_report* report, const char** json) {
  return guarded([&] {
    require(report, "report");
    require(json, "json");
    report->json = eval_json(report->report).dump(2);
    *json = report->json.c_str();
  });
}

posesynth_status posesynth_eval_report_summary(posesynth_eval_report* report, const char** text) {
  return guarded([&] {
    require(report, "report");
    require(text, "text");
    report->summary = eval_summary(report->report);
    *text = report->summary.c_str();
  });
}

posesynth_status posesynth_eval_report_write_csv(const posesynth_eval_report* report, const char* path) {
  return guarded([&] {
    require(report, "report");
    require(path, "path");
    write_eval_csv(path, report->report);
  });
}

posesynth_status posesynth_toygen(const char* spec_json, int n_videos, int frames_per_video, const char* out_dir) {
  return guarded([&] {
    require(out_dir, "out_dir");
    ToyFigureSpec spec;
    if (spec_json) spec = ToyFigureSpec::from_json(parse_json(spec_json, "toy spec"));
    generate_toy_dataset(spec, n_videos, frames_per_video, out_dir);
  });
}

}  // extern "C"
