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

#include <functional>
#include <set>

#include <json.hpp>

#include "core/data/dataset.hpp"
#include "core/data/image_io.hpp"
#include "core/data/toy.hpp"
#include "core/error.hpp"
#include "support.hpp"

using namespace posesynth;
using posesynth::testing::read_file;
using posesynth::testing::temp_dir;

namespace fs = std::filesystem;

namespace {

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("data_io") {
  TEST_CASE("pixel mapping") {
    CHECK(decode_pixel(255) == 1.0f);
    CHECK(decode_pixel(0) == -1.0f);
    for (int v = 0; v < 256; ++v) CHECK(encode_pixel(decode_pixel(static_cast<std::uint8_t>(v))) == v);
    CHECK(encode_pixel(3.0) == 255);
    CHECK(encode_pixel(-7.0) == 0);
    CHECK(encode_unit(0.5) == 128);
    CHECK(encode_unit(1.5) == 255);
  }

  TEST_CASE("grid-valued images round-trip exactly") {
    const auto dir = temp_dir("image_io");
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> level(0, 255);
    Tensor<float> img(1, 3, 13, 17);
    for (std::size_t i = 0; i < img.size(); ++i) img.data()[i] = decode_pixel(static_cast<std::uint8_t>(level(rng)));
    write_image(dir / "a.png", img);
    const auto back = read_image(dir / "a.png");
    REQUIRE(back.shape() == img.shape());
    for (std::size_t i = 0; i < img.size(); ++i) CHECK(back.data()[i] == img.data()[i]);
  }

  TEST_CASE("out-of-range values are clamped on write") {
    const auto dir = temp_dir("image_clamp");
    Tensor<float> img(1, 3, 2, 2);
    img.data()[0] = 4.0f;
    img.data()[1] = -2.5f;
    write_image(dir / "c.png", img);
    const auto back = read_image(dir / "c.png");
    CHECK(back.data()[0] == 1.0f);
    CHECK(back.data()[1] == -1.0f);
    CHECK(back.data()[2] == decode_pixel(encode_pixel(0.0)));
  }

  TEST_CASE("read errors are typed") {
    const auto dir = temp_dir("image_err");
    std::ofstream(dir / "fake.png") << "definitely not a png";
    CHECK_THROWS_AS(read_image(dir / "fake.png"), DecodeError);
    CHECK_THROWS_AS(read_image(dir / "absent.png"), IoError);
  }

  TEST_CASE("toy dataset: records and exact keypoints") {
    ToyFigureSpec spec;
    const auto m = generate_toy_dataset(spec, 1, 10, temp_dir("toy_one"));
    REQUIRE(m.videos.size() == 1);
    CHECK(m.frame_count() == 10);
    CHECK(m.image_size == 64);
    const ToyVideo v = make_toy_video(spec, 0);
    for (int f = 0; f < 10; ++f) {
      const auto& rec = m.videos[0].frames[f];
      CHECK(rec.index == f);
      const Keypoints exact = toy_pose(spec, v, f);
      const Keypoints stored = read_keypoints(m.resolve(rec.keypoints));
      for (int j = 0; j < kNumJoints; ++j) {
        CHECK(stored.joints[j].x == exact.joints[j].x);
        CHECK(stored.joints[j].y == exact.joints[j].y);
        CHECK(rec.pose.joints[j].x == exact.joints[j].x);
      }
      const auto img = load_frame_image(m, rec);
      const auto rendered = render_toy_frame(spec, v, f).image;
      for (std::size_t i = 0; i < img.size(); ++i)
        CHECK(img.data()[i] == decode_pixel(encode_pixel(rendered.data()[i])));
    }
  }

  TEST_CASE("toy generation is deterministic") {
    ToyFigureSpec spec;
    spec.seed = 9;
    const auto a = temp_dir("toy_det_a"), b = temp_dir("toy_det_b");
    generate_toy_dataset(spec, 2, 3, a);
    generate_toy_dataset(spec, 2, 3, b);
    int files = 0;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
      if (!e.is_regular_file()) continue;
      const auto rel = fs::relative(e.path(), a);
      CHECK(read_file(e.path()) == read_file(b / rel));
      ++files;
    }
    CHECK(files == 1 + 2 * 3 * 2);
    spec.seed = 10;
    const auto c = temp_dir("toy_det_c");
    generate_toy_dataset(spec, 2, 3, c);
    CHECK(read_file(a / "v000" / "frame_0000.png") != read_file(c / "v000" / "frame_0000.png"));
  }

  TEST_CASE("rendered parts contain their joints") {
    ToyFigureSpec spec;
    const auto& scheme = part_scheme();
    for (int vi = 0; vi < 4; ++vi) {
      const ToyVideo v = make_toy_video(spec, vi);
      for (int f = 0; f < 30; ++f) {
        const ToyFrame fr = render_toy_frame(spec, v, f);
        for (int part = 1; part < kNumParts; ++part) {
          int x0 = 1 << 20, y0 = 1 << 20, x1 = -1, y1 = -1;
          for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 64; ++x)
              if (fr.coverage[part][static_cast<std::size_t>(y) * 64 + x]) {
                x0 = std::min(x0, x);
                x1 = std::max(x1, x);
                y0 = std::min(y0, y);
                y1 = std::max(y1, y);
              }
          for (JointId j : scheme.parts[part].joints) {
            const Joint& jt = fr.pose[j];
            // Joints that leave the frame cannot be covered by in-frame pixels.
            if (jt.x < 0 || jt.y < 0 || jt.x > 63 || jt.y > 63) continue;
            INFO("video ", vi, " frame ", f, " part ", scheme.parts[part].name, " joint ", joint_name(j));
            REQUIRE(x1 >= 0);
            // Capsule limbs cover their end points with margin. The torso quad
            // has its corners on the joints, and pixel-centre sampling of a
            // sharp corner can miss it by up to about one pixel.
            const double slack = part == kNumParts - 1 ? 1.5 : 0.5;
            CHECK(jt.x >= x0 - slack);
            CHECK(jt.x <= x1 + slack);
            CHECK(jt.y >= y0 - slack);
            CHECK(jt.y <= y1 + slack);
          }
        }
      }
    }
  }

  TEST_CASE("toy spec validation and round trip") {
    ToyFigureSpec spec;
    spec.persons = 3;
    spec.motion = 0.5;
    const auto back = ToyFigureSpec::from_json(spec.to_json());
    CHECK(back.to_json() == spec.to_json());
    spec.image_size = 50;
    CHECK_THROWS_AS(spec.validate(), InvalidInput);
    const auto m = generate_toy_dataset(back, 6, 2, temp_dir("toy_persons"));
    std::set<std::string> persons;
    for (const auto& v : m.videos) persons.insert(v.person_id);
    CHECK(persons.size() == 3);
  }

  TEST_CASE("manifest round trip is identity on metadata") {
    const auto dir = temp_dir("manifest");
    const auto m = generate_toy_dataset(ToyFigureSpec{}, 2, 3, dir);
    write_manifest(dir / "copy.json", m);
    const auto a = load_dataset(dir / "manifest.json");
    const auto b = load_dataset(dir / "copy.json");
    CHECK(a.schema_version == b.schema_version);
    CHECK(a.image_size == b.image_size);
    REQUIRE(a.videos.size() == b.videos.size());
    for (std::size_t i = 0; i < a.videos.size(); ++i) {
      CHECK(a.videos[i].id == b.videos[i].id);
      CHECK(a.videos[i].person_id == b.videos[i].person_id);
      CHECK(a.videos[i].action == b.videos[i].action);
      REQUIRE(a.videos[i].frames.size() == b.videos[i].frames.size());
      for (std::size_t f = 0; f < a.videos[i].frames.size(); ++f) {
        CHECK(a.videos[i].frames[f].index == b.videos[i].frames[f].index);
        CHECK(a.videos[i].frames[f].image == b.videos[i].frames[f].image);
        CHECK(a.videos[i].frames[f].keypoints == b.videos[i].frames[f].keypoints);
      }
    }
    const auto sel = select_videos(a, {a.videos[1].id});
    REQUIRE(sel.videos.size() == 1);
    CHECK(sel.videos[0].id == a.videos[1].id);
    CHECK_THROWS_AS(a.video("nope"), InvalidInput);
  }

  TEST_CASE("load errors name the offending file") {
    const auto dir = temp_dir("manifest_err");
    const auto m = generate_toy_dataset(ToyFigureSpec{}, 2, 3, dir);

    const fs::path kp = m.resolve(m.videos[1].frames[2].keypoints);
    auto doc = nlohmann::json::parse(read_file(kp));
    doc["joints"].erase(doc["joints"].end() - 1);
    std::ofstream(kp) << doc.dump();
    std::string msg = error_of([&] { load_dataset(dir / "manifest.json"); });
    CHECK(msg.find(kp.string()) != std::string::npos);
    CHECK(msg.find("13") != std::string::npos);

    write_keypoints(kp, m.videos[1].frames[2].pose);
    const fs::path img = m.resolve(m.videos[0].frames[1].image);
    fs::remove(img);
    msg = error_of([&] { load_dataset(dir / "manifest.json"); });
    CHECK(msg.find(img.string()) != std::string::npos);
    CHECK_THROWS_AS(load_dataset(dir / "manifest.json"), IoError);

    std::ofstream(dir / "broken.json") << "{\"schema_version\": 1, \"videos\": [";
    CHECK_THROWS_AS(load_dataset(dir / "broken.json"), DecodeError);
    CHECK_THROWS_AS(load_dataset(dir / "missing.json"), IoError);
  }

  TEST_CASE("frame images must match the manifest size") {
    const auto dir = temp_dir("manifest_size");
    auto m = generate_toy_dataset(ToyFigureSpec{}, 1, 2, dir);
    write_image(m.resolve(m.videos[0].frames[0].image), Tensor<float>(1, 3, 32, 32));
    CHECK_THROWS_AS(load_frame_image(m, m.videos[0].frames[0]), DecodeError);
  }
}
