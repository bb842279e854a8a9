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
#include <doctest.h>

#include <map>
#include <sstream>

#include "core/error.hpp"
#include "core/generator.hpp"
#include "core/training.hpp"
#include "support.hpp"

using namespace posesynth;
using posesynth::testing::random_tensor;
using posesynth::testing::standing_pose;
using posesynth::testing::temp_dir;
using posesynth::testing::toy_dataset;

namespace {

DatasetManifest fake_manifest(const std::vector<std::string>& persons) {
  DatasetManifest m;
  m.image_size = 64;
  for (std::size_t i = 0; i < persons.size(); ++i) {
    VideoRecord v;
    v.id = "v" + std::to_string(i);
    v.person_id = persons[i];
    m.videos.push_back(v);
  }
  return m;
}

std::vector<std::vector<float>> all_parameters(const Model& m) {
  std::vector<std::vector<float>> out;
  for (const auto* net : {&m.nets.seg, &m.nets.fg, &m.nets.bg})
    for (const auto& p : net->parameters()) out.emplace_back(p.value.begin(), p.value.end());
  if (m.discriminator)
    for (const auto& p : m.discriminator->parameters()) out.emplace_back(p.value.begin(), p.value.end());
  return out;
}

TrainConfig small_config(LossMode mode, std::int64_t steps) {
  TrainConfig c = TrainConfig::desk();
  c.mode = mode;
  c.max_steps = steps;
  c.batch_size = 2;
  c.holdout_fraction = 0.25;
  c.feature_stats_images = 4;
  return c;
}

// Pixel of the largest value in channel 0.
std::pair<int, int> argmax_pixel(const Tensor<float>& t) {
  int best = 0;
  const float* p = t.plane(0, 0);
  for (std::size_t i = 1; i < t.shape().plane(); ++i)
    if (p[i] > p[best]) best = static_cast<int>(i);
  return {best % t.w(), best / t.w()};
}

}  // namespace

TEST_SUITE("training") {
  TEST_CASE("config validation and round trip") {
    TrainConfig c = TrainConfig::desk();
    CHECK_NOTHROW(c.validate());
    c.mode = LossMode::VggGan;
    c.learning_rate = 2e-4;
    const auto back = TrainConfig::from_json(c.to_json());
    CHECK(back.to_json() == c.to_json());
    CHECK(back.beta1 == 0.9);
    CHECK(back.beta2 == 0.999);
    CHECK(back.epsilon == 1e-8);
    CHECK(TrainConfig().batch_size == 8);
    CHECK(TrainConfig::desk().batch_size == 4);
    c.init = "xavier";
    CHECK_THROWS_AS(c.validate(), InvalidInput);
    c = TrainConfig::desk();
    c.learning_rate = -1;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
  }

  TEST_CASE("split examples") {
    std::vector<std::string> distinct;
    for (int i = 0; i < 10; ++i) distinct.push_back("p" + std::to_string(i));
    const auto s = split_dataset(fake_manifest(distinct), 0.1, 3);
    CHECK(s.train.size() == 9);
    CHECK(s.test.size() == 1);
    const auto again = split_dataset(fake_manifest(distinct), 0.1, 3);
    CHECK(again.train == s.train);
    CHECK(again.test == s.test);

    auto shared = distinct;
    shared[7] = shared[3];
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      const auto sp = split_dataset(fake_manifest(shared), 0.2, seed);
      const bool v3 = std::count(sp.test.begin(), sp.test.end(), "v3") > 0;
      const bool v7 = std::count(sp.test.begin(), sp.test.end(), "v7") > 0;
      CHECK(v3 == v7);
      CHECK(sp.train.size() + sp.test.size() == 10);
      CHECK(!sp.test.empty());
      CHECK(!sp.train.empty());
    }

    try {
      split_dataset(fake_manifest({"solo", "solo", "solo"}), 0.3, 1);
      FAIL("expected an error");
    } catch (const InvalidInput& e) {
      CHECK(std::string(e.what()).find("solo") != std::string::npos);
    }
  }

  TEST_CASE("frame pairs are uniform over ordered pairs") {
    std::mt19937_64 rng(11);
    for (int k = 0; k < 50; ++k) {
      const auto [s, t] = sample_frame_pair(2, rng);
      CHECK(s != t);
      CHECK(s + t == 1);
    }
    const int n = 4, draws = 10000;
    std::map<std::pair<int, int>, int> counts;
    for (int k = 0; k < draws; ++k) {
      const auto pr = sample_frame_pair(n, rng);
      REQUIRE(pr.first != pr.second);
      ++counts[pr];
    }
    CHECK(counts.size() == 12);
    const double expected = static_cast<double>(draws) / 12;
    double chi2 = 0;
    for (const auto& [pair, c] : counts) chi2 += (c - expected) * (c - expected) / expected;
    // Upper 0.001 quantile of chi-square with 11 degrees of freedom.
    const double critical = 31.264;
    INFO("chi2 = ", chi2);
    CHECK(chi2 < critical);
    CHECK_THROWS_AS(sample_frame_pair(1, rng), InvalidInput);
  }

  TEST_CASE("identity augmentation leaves the example unchanged") {
    std::mt19937_64 rng(2);
    TrainingExample ex{random_tensor<float>({1, 3, 64, 64}, rng), random_tensor<float>({1, 3, 64, 64}, rng),
                       standing_pose(64, rng, 0.02), standing_pose(64, rng, 0.02), "v", "p", 0, 1};
    const auto out = augment(ex, AugmentRanges::identity(), rng);
    for (std::size_t i = 0; i < ex.source.size(); ++i) {
      CHECK(out.source.data()[i] == ex.source.data()[i]);
      CHECK(out.target.data()[i] == ex.target.data()[i]);
    }
    for (int j = 0; j < kNumJoints; ++j) {
      CHECK(out.source_pose.joints[j].x == ex.source_pose.joints[j].x);
      CHECK(out.target_pose.joints[j].y == ex.target_pose.joints[j].y);
    }
  }

  TEST_CASE("flip moves and relabels joints") {
    std::mt19937_64 rng(3);
    const Keypoints kp = standing_pose(64, rng, 0.02);
    AugmentParams p;
    p.flip = true;
    const auto f = augment_keypoints(kp, p, 64, 64);
    CHECK(f[JointId::RightShoulder].x == doctest::Approx(63 - kp[JointId::LeftShoulder].x).epsilon(1e-12));
    CHECK(f[JointId::RightShoulder].y == doctest::Approx(kp[JointId::LeftShoulder].y).epsilon(1e-12));
    CHECK(f[JointId::Head].x == doctest::Approx(63 - kp[JointId::Head].x).epsilon(1e-12));

    // Saturation touches images only.
    AugmentParams sat;
    sat.saturation = 0.5;
    const auto same = augment_keypoints(kp, sat, 64, 64);
    for (int j = 0; j < kNumJoints; ++j) CHECK(same.joints[j].x == kp.joints[j].x);
    const auto img = random_tensor<float>({1, 3, 8, 8}, rng);
    const auto grey = augment_image(img, sat);
    bool changed = false;
    for (std::size_t i = 0; i < img.size(); ++i) changed |= grey.data()[i] != img.data()[i];
    CHECK(changed);
  }

  TEST_CASE("rotation then its inverse restores keypoints") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> th(-0.5, 0.5);
    for (int trial = 0; trial < 50; ++trial) {
      const Keypoints kp = standing_pose(64, rng, 0.05);
      AugmentParams p, q;
      p.rotate_rad = th(rng);
      q.rotate_rad = -p.rotate_rad;
      const auto back = augment_keypoints(augment_keypoints(kp, p, 64, 64), q, 64, 64);
      for (int j = 0; j < kNumJoints; ++j) {
        CHECK(std::abs(back.joints[j].x - kp.joints[j].x) < 1e-9);
        CHECK(std::abs(back.joints[j].y - kp.joints[j].y) < 1e-9);
      }
    }
  }

  TEST_CASE("augmented keypoints follow the image content") {
    std::mt19937_64 rng(5);
    const AugmentRanges ranges;
    int located = 0;
    for (int trial = 0; trial < 40; ++trial) {
      const Keypoints kp = standing_pose(64, rng, 0.03);
      const AugmentParams p = draw_augment(ranges, rng);
      const auto moved = augment_keypoints(kp, p, 64, 64);
      for (JointId j : {JointId::Head, JointId::LeftWrist, JointId::RightKnee}) {
        const Joint& src = kp[j];
        Tensor<float> dot(1, 1, 64, 64);
        for (int y = 0; y < 64; ++y)
          for (int x = 0; x < 64; ++x) {
            const double d2 = (x - src.x) * (x - src.x) + (y - src.y) * (y - src.y);
            dot.at(0, 0, y, x) = static_cast<float>(std::exp(-d2 / (2 * 1.5 * 1.5)));
          }
        const auto [ax, ay] = argmax_pixel(augment_image(dot, p));
        const Joint& m = moved[p.flip ? mirror(j) : j];
        // Content pushed past the border is clamped away and cannot be located.
        if (m.x < 2 || m.x > 61 || m.y < 2 || m.y > 61) continue;
        ++located;
        INFO("trial ", trial, " joint ", joint_name(j));
        CHECK(std::abs(ax - m.x) <= 1.0);
        CHECK(std::abs(ay - m.y) <= 1.0);
      }
    }
    CHECK(located >= 100);
  }

  TEST_CASE("L1 overfits two pairs") {
    auto data = toy_dataset("overfit", 1, 4);
    const VideoRecord& v = data.videos[0];
    std::vector<TrainingExample> batch;
    for (auto [s, t] : {std::pair{0, 2}, {1, 3}})
      batch.push_back({load_frame_image(data, v.frames[s]), load_frame_image(data, v.frames[t]), v.frames[s].pose,
                       v.frames[t].pose, v.id, v.person_id, s, t});
    TrainConfig cfg = TrainConfig::desk();
    cfg.learning_rate = 2e-4;
    Model model = Model::create(cfg.generator, 7, cfg.init_scheme());
    Trainer trainer(cfg, model);
    std::vector<double> losses;
    for (int s = 0; s <= 50; ++s) losses.push_back(trainer.step(batch).l1);
    int decreasing = 0;
    for (int s = 1; s <= 50; ++s) decreasing += losses[s] < losses[s - 1];
    std::ostringstream curve;
    for (double l : losses) curve << l << ' ';
    INFO("curve: ", curve.str());
    CHECK(decreasing >= 45);
    CHECK(trainer.generator_updates() == 51);
    CHECK(trainer.discriminator_updates() == 0);
  }

  TEST_CASE("zero learning rate leaves parameters bit-identical") {
    auto data = toy_dataset("zero_lr", 4, 4);
    for (LossMode mode : {LossMode::L1, LossMode::VggGan}) {
      TrainConfig cfg = small_config(mode, 0);
      cfg.learning_rate = 0.0;
      const auto before = all_parameters(train_model(cfg, data).model);
      cfg.max_steps = 2;
      const auto result = train_model(cfg, data);
      CHECK(result.curve.size() == 2);
      CHECK(all_parameters(result.model) == before);
    }
  }

  TEST_CASE("GAN mode updates D once per step; runs are reproducible") {
    auto data = toy_dataset("gan_counts", 4, 4);
    const TrainConfig cfg = small_config(LossMode::VggGan, 3);
    const auto a = train_model(cfg, data);
    CHECK(a.generator_updates == 3);
    CHECK(a.discriminator_updates == 3);
    for (const auto& r : a.curve) {
      CHECK(std::isfinite(r.gan_d));
      CHECK(std::isfinite(r.gan_g));
      CHECK(r.combined == doctest::Approx(loss_combined(r.vgg, r.gan_g, r.lambda)));
    }
    const auto b = train_model(cfg, data);
    REQUIRE(b.curve.size() == a.curve.size());
    for (std::size_t i = 0; i < a.curve.size(); ++i) {
      CHECK(a.curve[i].l1 == b.curve[i].l1);
      CHECK(a.curve[i].vgg == b.curve[i].vgg);
      CHECK(a.curve[i].gan_d == b.curve[i].gan_d);
    }
    CHECK(all_parameters(a.model) == all_parameters(b.model));
    const auto l1 = train_model(small_config(LossMode::L1, 2), data);
    CHECK(l1.discriminator_updates == 0);
    CHECK_FALSE(l1.model.discriminator.has_value());
  }

  TEST_CASE("test videos are never sampled") {
    auto data = toy_dataset("audit", 8, 4);
    TrainConfig cfg = small_config(LossMode::L1, 12);
    const auto r = train_model(cfg, data);
    REQUIRE(!r.split.test.empty());
    for (const auto& id : r.split.test) CHECK(r.sampled_videos.count(id) == 0);
    for (const auto& id : r.sampled_videos)
      CHECK(std::find(r.split.train.begin(), r.split.train.end(), id) != r.split.train.end());
    CHECK(r.model.history["test_videos"].get<std::vector<std::string>>() == r.split.test);
  }

  TEST_CASE("loss log and checkpoint") {
    auto data = toy_dataset("log", 4, 4);
    const auto dir = temp_dir("log_out");
    TrainOptions opts;
    opts.log_csv = dir / "loss.csv";
    opts.checkpoint_out = dir / "model.ckpt";
    const auto r = train_model(small_config(LossMode::Vgg, 3), data, opts);
    std::ifstream in(opts.log_csv);
    std::string line;
    std::getline(in, line);
    CHECK(line == "step,l1,vgg,gan_g,gan_d,combined,wall_ms");
    int rows = 0;
    while (std::getline(in, line)) {
      ++rows;
      CHECK(line.rfind(std::to_string(rows) + ",", 0) == 0);
    }
    CHECK(rows == 3);
    const Model back = load_model(opts.checkpoint_out);
    CHECK(back.steps == 3);
    CHECK(all_parameters(back) == all_parameters(r.model));
  }

  TEST_CASE("progress callback stops early") {
    auto data = toy_dataset("progress", 4, 4);
    TrainOptions opts;
    opts.progress = [](std::int64_t step, const LossReport&) { return step < 2; };
    CHECK(train_model(small_config(LossMode::L1, 10), data, opts).curve.size() == 2);
  }

  TEST_CASE("warm start copies the generator") {
    const auto dir = temp_dir("warm");
    TrainConfig cfg = small_config(LossMode::VggGan, 1);
    const Model vgg = Model::create(cfg.generator, 21, nn::InitScheme::HeNormal);
    save_model(dir / "vgg.ckpt", vgg);
    const Model gan = warm_start_gan(dir / "vgg.ckpt", cfg);
    REQUIRE(gan.discriminator.has_value());
    CHECK(gan.mode == LossMode::VggGan);

    std::mt19937_64 rng(1);
    const std::vector<GeneratorInput<float>> in{
        {random_tensor<float>({1, 3, 64, 64}, rng), standing_pose(64, rng, 0.02), standing_pose(64, rng, 0.02)}};
    std::mt19937_64 n1(5), n2(5);
    const auto ya = generator_forward<float>(vgg.nets, vgg.config, in, n1).image;
    const auto yb = generator_forward<float>(gan.nets, gan.config, in, n2).image;
    for (std::size_t i = 0; i < ya.size(); ++i) CHECK(ya.data()[i] == yb.data()[i]);

    // The discriminator shares no weights with the generator.
    const auto& d0 = gan.discriminator->parameters().front().value;
    for (const auto* net : {&gan.nets.seg, &gan.nets.fg, &gan.nets.bg}) {
      const auto& g0 = net->parameters().front().value;
      const std::size_t n = std::min(d0.size(), g0.size());
      CHECK_FALSE(std::equal(d0.begin(), d0.begin() + n, g0.begin()));
    }

    TrainConfig other = cfg;
    other.generator.resolution = 128;
    CHECK_THROWS_AS(warm_start_gan(dir / "vgg.ckpt", other), FingerprintMismatch);
  }
}
