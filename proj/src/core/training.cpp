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
#include "core/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "core/random.hpp"

namespace posesynth {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Seed streams.
constexpr std::uint64_t kStreamSampling = 10, kStreamNoise = 11, kStreamGenerator = 12, kStreamDiscriminator = 13,
                        kStreamFeatures = 14, kStreamSplit = 15;

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw InvalidInput(where + " must be an object");
  for (const auto& [k, _] : j.items())
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }) == allowed.end())
      throw InvalidInput(where + ": unknown key '" + k + "'");
}

}  // namespace

// ---------------------------------------------------------------- config

void AugmentRanges::validate() const {
  if (!(scale_min > 0.0) || scale_max < scale_min) throw InvalidInput("augment scale range must satisfy 0 < min <= max");
  if (translate_px < 0.0 || rotate_deg < 0.0) throw InvalidInput("augment translation/rotation must be >= 0");
  if (flip_probability < 0.0 || flip_probability > 1.0) throw InvalidInput("flip probability must be in [0, 1]");
  if (saturation_min < 0.0 || saturation_max < saturation_min)
    throw InvalidInput("augment saturation range must satisfy 0 <= min <= max");
}

nlohmann::json AugmentRanges::to_json() const {
  return {{"scale", {scale_min, scale_max}},      {"translate_px", translate_px},
          {"rotate_deg", rotate_deg},             {"flip_probability", flip_probability},
          {"saturation", {saturation_min, saturation_max}}};
}

AugmentRanges AugmentRanges::from_json(const nlohmann::json& j) {
  check_keys(j, {"scale", "translate_px", "rotate_deg", "flip_probability", "saturation"}, "augment_ranges");
  AugmentRanges r;
  if (j.contains("scale")) r.scale_min = j["scale"].at(0), r.scale_max = j["scale"].at(1);
  r.translate_px = j.value("translate_px", r.translate_px);
  r.rotate_deg = j.value("rotate_deg", r.rotate_deg);
  r.flip_probability = j.value("flip_probability", r.flip_probability);
  if (j.contains("saturation")) r.saturation_min = j["saturation"].at(0), r.saturation_max = j["saturation"].at(1);
  r.validate();
  return r;
}

void TrainConfig::validate() const {
  generator.validate();
  if (!(learning_rate >= 0.0)) throw InvalidInput("learning_rate must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && epsilon > 0.0))
    throw InvalidInput("invalid Adam hyper-parameters");
  if (batch_size < 1) throw InvalidInput("batch_size must be >= 1");
  if (max_steps < 0) throw InvalidInput("max_steps must be >= 0");
  if (lambda < 0.0) throw InvalidInput("lambda must be >= 0");
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) throw InvalidInput("holdout_fraction must be in (0, 1)");
  if (checkpoint_every < 0) throw InvalidInput("checkpoint_every must be >= 0");
  if (feature_stats_images < 1) throw InvalidInput("feature_stats_images must be >= 1");
  (void)init_scheme();
  augment_ranges.validate();
}

nn::InitScheme TrainConfig::init_scheme() const {
  if (init == "truncated_normal") return nn::InitScheme::TruncatedNormal;
  if (init == "he_normal") return nn::InitScheme::HeNormal;
  throw InvalidInput("unknown init '" + init + "' (expected truncated_normal or he_normal)");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"generator", generator.to_json()},
          {"loss_mode", loss_mode_name(mode)},
          {"learning_rate", learning_rate},
          {"adam", {{"beta1", beta1}, {"beta2", beta2}, {"epsilon", epsilon}}},
          {"batch_size", batch_size},
          {"max_steps", max_steps},
          {"lambda", lambda},
          {"saturating_gan", saturating_gan},
          {"augment", augment},
          {"augment_ranges", augment_ranges.to_json()},
          {"holdout_fraction", holdout_fraction},
          {"seed", seed},
          {"checkpoint_every", checkpoint_every},
          {"init", init},
          {"feature_profile", feature_profile_name(feature_profile)},
          {"vgg19_weights", vgg19_weights},
          {"feature_stats_images", feature_stats_images}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  check_keys(j,
             {"generator", "loss_mode", "learning_rate", "adam", "batch_size", "max_steps", "lambda", "saturating_gan",
              "augment", "augment_ranges", "holdout_fraction", "seed", "checkpoint_every", "init", "feature_profile",
              "vgg19_weights", "feature_stats_images"},
             "training config");
  TrainConfig c;
  try {
    if (j.contains("generator")) c.generator = GeneratorConfig::from_json(j["generator"]);
    if (j.contains("loss_mode")) c.mode = parse_loss_mode(j["loss_mode"].get<std::string>());
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    if (j.contains("adam")) {
      const auto& a = j["adam"];
      check_keys(a, {"beta1", "beta2", "epsilon"}, "adam");
      c.beta1 = a.value("beta1", c.beta1);
      c.beta2 = a.value("beta2", c.beta2);
      c.epsilon = a.value("epsilon", c.epsilon);
    }
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_steps = j.value("max_steps", c.max_steps);
    c.lambda = j.value("lambda", c.lambda);
    c.saturating_gan = j.value("saturating_gan", c.saturating_gan);
    c.augment = j.value("augment", c.augment);
    if (j.contains("augment_ranges")) c.augment_ranges = AugmentRanges::from_json(j["augment_ranges"]);
    c.holdout_fraction = j.value("holdout_fraction", c.holdout_fraction);
    c.seed = j.value("seed", c.seed);
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
    c.init = j.value("init", c.init);
    if (j.contains("feature_profile")) c.feature_profile = parse_feature_profile(j["feature_profile"].get<std::string>());
    c.vgg19_weights = j.value("vgg19_weights", c.vgg19_weights);
    c.feature_stats_images = j.value("feature_stats_images", c.feature_stats_images);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("training config: ") + e.what());
  }
  c.validate();
  return c;
}

TrainConfig TrainConfig::desk() {
  TrainConfig c;
  c.generator.resolution = 64;
  c.generator.desk = true;
  c.batch_size = 4;
  // Pixel-valued ranges are set for 256x256 frames.
  c.augment_ranges.translate_px *= 64.0 / 256.0;
  return c;
}

// ---------------------------------------------------------------- data

DatasetSplit split_dataset(const DatasetManifest& m, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw InvalidInput("split fraction must be in (0, 1)");
  const int n = static_cast<int>(m.videos.size());
  if (n < 2) throw InvalidInput("split needs at least two videos");

  std::vector<std::string> persons;
  std::map<std::string, int> group_size;
  for (const auto& v : m.videos)
    if (group_size[v.person_id]++ == 0) persons.push_back(v.person_id);
  if (persons.size() < 2)
    throw InvalidInput("cannot split: every video belongs to person '" + persons.front() +
                       "', who may not appear on both sides");

  std::mt19937_64 rng(derive_seed(seed, kStreamSplit));
  for (std::size_t i = persons.size() - 1; i > 0; --i) std::swap(persons[i], persons[uniform_index(rng, i + 1)]);

  // Subset sum over person groups: reach[g][s] = some subset of the first g
  // groups has s videos.
  const int groups = static_cast<int>(persons.size());
  std::vector<std::vector<char>> reach(groups + 1, std::vector<char>(n + 1, 0));
  reach[0][0] = 1;
  for (int g = 0; g < groups; ++g) {
    const int sz = group_size[persons[g]];
    for (int s = 0; s <= n; ++s)
      reach[g + 1][s] = reach[g][s] || (s >= sz && reach[g][s - sz]);
  }
  const double target = fraction * n;
  int best = -1;
  for (int s = 1; s < n; ++s)
    if (reach[groups][s] && (best < 0 || std::abs(s - target) < std::abs(best - target))) best = s;
  if (best < 0) throw InvalidInput("cannot split: no person grouping leaves both sides non-empty");

  std::set<std::string> test_persons;
  for (int g = groups, s = best; g > 0; --g) {
    if (reach[g - 1][s]) continue;
    test_persons.insert(persons[g - 1]);
    s -= group_size[persons[g - 1]];
  }
  DatasetSplit out;
  for (const auto& v : m.videos) (test_persons.count(v.person_id) ? out.test : out.train).push_back(v.id);
  return out;
}

std::pair<int, int> sample_frame_pair(int n, std::mt19937_64& rng) {
  if (n < 2) throw InvalidInput("a video needs at least two frames to sample a pair");
  const int s = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(n)));
  int t = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(n - 1)));
  if (t >= s) ++t;
  return {s, t};
}

AugmentParams draw_augment(const AugmentRanges& r, std::mt19937_64& rng) {
  AugmentParams p;
  p.flip = uniform01(rng) < r.flip_probability;
  p.scale = uniform_range(rng, r.scale_min, r.scale_max);
  p.rotate_rad = uniform_range(rng, -r.rotate_deg, r.rotate_deg) * kPi / 180.0;
  p.tx = uniform_range(rng, -r.translate_px, r.translate_px);
  p.ty = uniform_range(rng, -r.translate_px, r.translate_px);
  p.saturation = uniform_range(rng, r.saturation_min, r.saturation_max);
  return p;
}

namespace {

// Flip first, then scale/rotate about the image centre, then translate.
Point2 forward_map(Point2 q, const AugmentParams& p, int width, int height) {
  if (p.flip) q.x = (width - 1) - q.x;
  const double cx = 0.5 * (width - 1), cy = 0.5 * (height - 1);
  const double c = p.scale * std::cos(p.rotate_rad), s = p.scale * std::sin(p.rotate_rad);
  const double dx = q.x - cx, dy = q.y - cy;
  return {cx + c * dx - s * dy + p.tx, cy + s * dx + c * dy + p.ty};
}

Point2 inverse_map(Point2 q, const AugmentParams& p, int width, int height) {
  const double cx = 0.5 * (width - 1), cy = 0.5 * (height - 1);
  const double c = std::cos(p.rotate_rad) / p.scale, s = std::sin(p.rotate_rad) / p.scale;
  const double dx = q.x - cx - p.tx, dy = q.y - cy - p.ty;
  Point2 r{cx + c * dx + s * dy, cy - s * dx + c * dy};
  if (p.flip) r.x = (width - 1) - r.x;
  return r;
}

}  // namespace

Keypoints augment_keypoints(const Keypoints& kp, const AugmentParams& p, int width, int height) {
  if (p.spatial_identity()) return kp;
  Keypoints out;
  for (int j = 0; j < kNumJoints; ++j) {
    const Joint& src = kp.joints[j];
    const Point2 q = forward_map({src.x, src.y}, p, width, height);
    const int dst = p.flip ? index_of(mirror(static_cast<JointId>(j))) : j;
    out.joints[dst] = {q.x, q.y, src.present};
  }
  return out;
}

Tensor<float> augment_image(const Tensor<float>& image, const AugmentParams& p) {
  const int H = image.h(), W = image.w();
  Tensor<float> out = image;
  if (!p.spatial_identity()) {
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        const Point2 q = inverse_map({static_cast<double>(x), static_cast<double>(y)}, p, W, H);
        const double qx = std::clamp(q.x, 0.0, W - 1.0), qy = std::clamp(q.y, 0.0, H - 1.0);
        const int x0 = std::min(static_cast<int>(qx), W - 1), y0 = std::min(static_cast<int>(qy), H - 1);
        const int x1 = std::min(x0 + 1, W - 1), y1 = std::min(y0 + 1, H - 1);
        const double fx = qx - x0, fy = qy - y0;
        for (int n = 0; n < image.n(); ++n)
          for (int c = 0; c < image.c(); ++c) {
            const float* s = image.plane(n, c);
            const double v = (1 - fy) * ((1 - fx) * s[y0 * W + x0] + fx * s[y0 * W + x1]) +
                             fy * ((1 - fx) * s[y1 * W + x0] + fx * s[y1 * W + x1]);
            out.plane(n, c)[y * W + x] = static_cast<float>(v);
          }
      }
  }
  if (p.saturation != 1.0 && image.c() == 3) {
    const std::size_t hw = out.shape().plane();
    for (int n = 0; n < out.n(); ++n) {
      float* r = out.plane(n, 0);
      float* g = out.plane(n, 1);
      float* b = out.plane(n, 2);
      for (std::size_t i = 0; i < hw; ++i) {
        const double R = 0.5 * (r[i] + 1.0), G = 0.5 * (g[i] + 1.0), B = 0.5 * (b[i] + 1.0);
        const double lum = 0.299 * R + 0.587 * G + 0.114 * B;
        auto blend = [&](double v) { return static_cast<float>(2.0 * std::clamp(lum + p.saturation * (v - lum), 0.0, 1.0) - 1.0); };
        r[i] = blend(R);
        g[i] = blend(G);
        b[i] = blend(B);
      }
    }
  }
  return out;
}

TrainingExample augment(const TrainingExample& ex, const AugmentRanges& r, std::mt19937_64& rng) {
  const AugmentParams p = draw_augment(r, rng);
  TrainingExample out = ex;
  const int W = ex.source.w(), H = ex.source.h();
  out.source = augment_image(ex.source, p);
  out.target = augment_image(ex.target, p);
  out.source_pose = augment_keypoints(ex.source_pose, p, W, H);
  out.target_pose = augment_keypoints(ex.target_pose, p, W, H);
  return out;
}

// ---------------------------------------------------------------- optimiser

template <typename T>
void Adam<T>::step(nn::Network<T>& net) {
  auto& params = net.parameters();
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.value.size(), T(0));
      v_.emplace_back(p.value.size(), T(0));
    }
  }
  if (m_.size() != params.size()) throw InvalidState("Adam state does not match the network");
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  const T b1 = static_cast<T>(b1_), b2 = static_cast<T>(b2_);
  const T step = static_cast<T>(lr_ / c1), inv_c2 = static_cast<T>(1.0 / c2), eps = static_cast<T>(eps_);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k];
    T* m = m_[k].data();
    T* v = v_[k].data();
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const T g = p.grad[i];
      m[i] = b1 * m[i] + (T(1) - b1) * g;
      v[i] = b2 * v[i] + (T(1) - b2) * g * g;
      p.value[i] -= step * m[i] / (std::sqrt(v[i] * inv_c2) + eps);
    }
  }
}

template class Adam<float>;
template class Adam<double>;

// ---------------------------------------------------------------- trainer

Trainer::Trainer(TrainConfig cfg, Model& model)
    : cfg_(std::move(cfg)),
      model_(model),
      seg_opt_(cfg_.learning_rate, cfg_.beta1, cfg_.beta2, cfg_.epsilon),
      fg_opt_(cfg_.learning_rate, cfg_.beta1, cfg_.beta2, cfg_.epsilon),
      bg_opt_(cfg_.learning_rate, cfg_.beta1, cfg_.beta2, cfg_.epsilon),
      d_opt_(cfg_.learning_rate, cfg_.beta1, cfg_.beta2, cfg_.epsilon),
      noise_rng_(derive_seed(cfg_.seed, kStreamNoise)) {
  cfg_.validate();
  if (cfg_.mode != LossMode::L1 && !(model_.features && model_.features->fitted()))
    throw InvalidState("loss mode " + std::string(loss_mode_name(cfg_.mode)) + " needs fitted feature statistics");
  if (cfg_.mode == LossMode::VggGan && !model_.discriminator)
    throw InvalidState("vgg+gan mode needs a discriminator");
}

namespace {

std::string snapshot(std::int64_t step, const LossReport& r, const Model& m) {
  std::ostringstream os;
  os << "non-finite loss at step " << step << ": l1=" << r.l1 << " vgg=" << r.vgg << " gan_g=" << r.gan_g
     << " gan_d=" << r.gan_d << " combined=" << r.combined;
  auto norm = [&](const char* name, const nn::Network<float>& net) {
    double s = 0.0;
    bool finite = true;
    for (const auto& p : net.parameters())
      for (float v : p.value) {
        finite = finite && std::isfinite(v);
        s += static_cast<double>(v) * v;
      }
    os << "; |" << name << "|=" << std::sqrt(s) << (finite ? "" : " (non-finite parameters)");
  };
  norm("seg", m.nets.seg);
  norm("fg", m.nets.fg);
  norm("bg", m.nets.bg);
  return os.str();
}

}  // namespace

LossReport Trainer::step(std::span<const TrainingExample> batch) {
  if (batch.empty()) throw InvalidInput("train_step: empty batch");
  std::vector<GeneratorInput<float>> inputs;
  std::vector<Tensor<float>> targets;
  inputs.reserve(batch.size());
  for (const auto& ex : batch) {
    inputs.push_back({ex.source, ex.source_pose, ex.target_pose});
    targets.push_back(ex.target);
  }
  const Tensor<float> target = stack_samples<float>(targets);

  GeneratorTrace<float> trace;
  generator_forward<float>(model_.nets, model_.config, inputs, noise_rng_, &trace);
  const Tensor<float>& y = trace.out.image;

  LossReport rep;
  rep.lambda = cfg_.lambda;
  Tensor<float> grad;
  rep.l1 = loss_l1(y, target, cfg_.mode == LossMode::L1 ? &grad : nullptr);
  if (cfg_.mode == LossMode::L1) {
    rep.vgg = rep.gan_g = rep.gan_d = std::nan("");
    rep.combined = rep.l1;
  } else {
    rep.vgg = model_.features->loss(y, target, &grad);
    rep.gan_g = rep.gan_d = std::nan("");
    rep.combined = rep.vgg;
  }
  if (cfg_.mode == LossMode::VggGan) {
    const int r = model_.config.resolution;
    std::vector<Tensor<float>> heat;
    for (const auto& ex : batch) heat.push_back(render_heatmaps<float>(ex.target_pose, r, r, model_.config.heat_sigma()));
    const Tensor<float> ht = stack_samples<float>(heat);
    auto& d = *model_.discriminator;
    d.zero_grad();
    rep.gan_d = gan_d_step_gradients(d, target, y, ht);
    if (std::isfinite(rep.gan_d)) {
      d_opt_.step(d);
      ++d_updates_;
    }
    Tensor<float> grad_gan;
    rep.gan_g = gan_g_gradients(d, y, ht, cfg_.saturating_gan, &grad_gan);
    d.zero_grad();
    const float lam = static_cast<float>(cfg_.lambda);
    for (std::size_t i = 0; i < grad.size(); ++i) grad.data()[i] += lam * grad_gan.data()[i];
    rep.combined = loss_combined(rep.vgg, rep.gan_g, cfg_.lambda);
  }
  const bool finite = std::isfinite(rep.combined) && std::isfinite(rep.l1) &&
                      (cfg_.mode == LossMode::L1 || std::isfinite(rep.vgg)) &&
                      (cfg_.mode != LossMode::VggGan || (std::isfinite(rep.gan_d) && std::isfinite(rep.gan_g)));
  if (!finite) throw NumericError(snapshot(model_.steps + g_updates_ + 1, rep, model_));

  model_.nets.zero_grad();
  generator_backward(model_.nets, trace, grad);
  seg_opt_.step(model_.nets.seg);
  fg_opt_.step(model_.nets.fg);
  bg_opt_.step(model_.nets.bg);
  ++g_updates_;
  return rep;
}

Model warm_start_gan(const std::filesystem::path& checkpoint, const TrainConfig& cfg) {
  Model m = load_model(checkpoint, cfg.vgg19_weights);
  const std::string want = generator_fingerprint(cfg.generator);
  const std::string have = generator_fingerprint(m.config);
  if (want != have)
    throw FingerprintMismatch(checkpoint.string() + ": generator fingerprint " + have +
                              " does not match the configured generator " + want);
  const int r = m.config.resolution;
  m.discriminator.emplace(nn::discriminator_spec(m.config.width_divisor()), r, r,
                          derive_seed(cfg.seed, kStreamDiscriminator), cfg.init_scheme());
  m.mode = LossMode::VggGan;
  return m;
}

// ---------------------------------------------------------------- loop

namespace {

const char* kCsvHeader = "step,l1,vgg,gan_g,gan_d,combined,wall_ms";

std::string csv_value(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

TrainResult train_model(const TrainConfig& cfg, const DatasetManifest& data, const TrainOptions& opts) {
  cfg.validate();
  if (data.image_size != cfg.generator.resolution)
    throw InvalidInput("dataset image size " + std::to_string(data.image_size) + " differs from resolution " +
                       std::to_string(cfg.generator.resolution));
  const DatasetSplit split = split_dataset(data, cfg.holdout_fraction, cfg.seed);

  Model model = [&] {
    if (cfg.mode == LossMode::VggGan && !opts.warm_start.empty()) return warm_start_gan(opts.warm_start, cfg);
    Model m = Model::create(cfg.generator, derive_seed(cfg.seed, kStreamGenerator), cfg.init_scheme());
    if (cfg.mode == LossMode::VggGan) {
      const int r = m.config.resolution;
      m.discriminator.emplace(nn::discriminator_spec(m.config.width_divisor()), r, r,
                              derive_seed(cfg.seed, kStreamDiscriminator), cfg.init_scheme());
    }
    return m;
  }();
  model.mode = cfg.mode;

  // Training frames stay in memory.
  std::vector<const VideoRecord*> videos;
  std::map<std::string, std::vector<Tensor<float>>> frames;
  for (const auto& id : split.train) {
    const VideoRecord& v = data.video(id);
    if (v.frames.size() < 2) throw InvalidInput("training video '" + id + "' has fewer than two frames");
    videos.push_back(&v);
    auto& imgs = frames[id];
    for (const auto& f : v.frames) imgs.push_back(load_frame_image(data, f));
  }

  if (!model.features || !model.features->fitted()) {
    FeatureExtractor<float> phi =
        cfg.feature_profile == FeatureProfile::Vgg19
            ? FeatureExtractor<float>::load_vgg19(cfg.vgg19_weights)
            : FeatureExtractor<float>::random_fixed(derive_seed(cfg.seed, kStreamFeatures),
                                                    cfg.generator.width_divisor());
    std::vector<Tensor<float>> sample;
    for (std::size_t k = 0; static_cast<int>(sample.size()) < cfg.feature_stats_images; ++k) {
      bool any = false;
      for (const auto* v : videos) {
        const auto& imgs = frames[v->id];
        if (k >= imgs.size()) continue;
        any = true;
        sample.push_back(imgs[k]);
        if (static_cast<int>(sample.size()) == cfg.feature_stats_images) break;
      }
      if (!any) break;
    }
    phi.fit_stats(sample);
    model.features = std::move(phi);
  }

  std::ofstream log;
  if (!opts.log_csv.empty()) {
    const bool fresh = !std::filesystem::exists(opts.log_csv) || std::filesystem::file_size(opts.log_csv) == 0;
    if (opts.log_csv.has_parent_path()) std::filesystem::create_directories(opts.log_csv.parent_path());
    log.open(opts.log_csv, std::ios::app);
    if (!log) throw IoError(opts.log_csv.string() + ": cannot open training log");
    if (fresh) log << kCsvHeader << "\n";
  }

  TrainResult result{std::move(model), split, {}, {}, 0, 0};
  Model& m = result.model;
  Trainer trainer(cfg, m);
  std::mt19937_64 rng(derive_seed(cfg.seed, kStreamSampling));
  const auto t0 = std::chrono::steady_clock::now();
  const std::int64_t start = m.steps;

  auto save = [&] {
    m.history = {{"train_videos", split.train}, {"test_videos", split.test}, {"config", cfg.to_json()},
                 {"generator_updates", trainer.generator_updates()},
                 {"discriminator_updates", trainer.discriminator_updates()}};
    if (!opts.checkpoint_out.empty()) save_model(opts.checkpoint_out, m);
  };

  for (std::int64_t s = 1; s <= cfg.max_steps; ++s) {
    std::vector<TrainingExample> batch;
    for (int b = 0; b < cfg.batch_size; ++b) {
      const VideoRecord& v = *videos[uniform_index(rng, videos.size())];
      const auto [fs, ft] = sample_frame_pair(static_cast<int>(v.frames.size()), rng);
      const auto& imgs = frames[v.id];
      TrainingExample ex{imgs[fs], imgs[ft], v.frames[fs].pose, v.frames[ft].pose, v.id, v.person_id, fs, ft};
      if (cfg.augment) ex = augment(ex, cfg.augment_ranges, rng);
      result.sampled_videos.insert(v.id);
      batch.push_back(std::move(ex));
    }
    const LossReport rep = trainer.step(batch);
    m.steps = start + s;
    result.curve.push_back(rep);
    const double wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (log) {
      log << m.steps << ',' << csv_value(rep.l1) << ',' << csv_value(rep.vgg) << ',' << csv_value(rep.gan_g) << ','
          << csv_value(rep.gan_d) << ',' << csv_value(rep.combined) << ',' << csv_value(wall_ms) << "\n";
      log.flush();
    }
    if (cfg.checkpoint_every > 0 && s % cfg.checkpoint_every == 0 && s != cfg.max_steps) save();
    if (opts.progress && !opts.progress(m.steps, rep)) break;
  }
  result.generator_updates = trainer.generator_updates();
  result.discriminator_updates = trainer.discriminator_updates();
  save();
  return result;
}

}  // namespace posesynth
