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

#include "core/error.hpp"
#include "core/geometry.hpp"
#include "support.hpp"

using namespace posesynth;
using posesynth::testing::random_tensor;
using posesynth::testing::standing_pose;

namespace {

void check_params(const SimilarityTransform& t, double a, double b, double tx, double ty, double tol = 1e-12) {
  CHECK(std::abs(t.a - a) < tol);
  CHECK(std::abs(t.b - b) < tol);
  CHECK(std::abs(t.tx - tx) < tol);
  CHECK(std::abs(t.ty - ty) < tol);
}

SimilarityTransform random_similarity(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> s(0.5, 2.0), th(-3.1, 3.1), d(-20, 20);
  return SimilarityTransform::from_scale_rotation(s(rng), th(rng), d(rng), d(rng));
}

}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("fit: identity and the hand-solved rotation") {
    const std::vector<Point2> src{{0, 0}, {1, 0}};
    check_params(fit_similarity(src, src), 1, 0, 0, 0);
    const std::vector<Point2> dst{{2, 3}, {2, 4}};
    const auto t = fit_similarity(src, dst);
    check_params(t, 0, 1, 2, 3);
    for (std::size_t i = 0; i < src.size(); ++i) {
      CHECK(t.apply(src[i]).x == doctest::Approx(dst[i].x));
      CHECK(t.apply(src[i]).y == doctest::Approx(dst[i].y));
    }
  }

  TEST_CASE("fit recovers random similarities on torso joints") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 200; ++trial) {
      const Keypoints kp = standing_pose(256, rng, 0.03);
      const std::vector<Point2> src{{kp[JointId::LeftShoulder].x, kp[JointId::LeftShoulder].y},
                                    {kp[JointId::RightShoulder].x, kp[JointId::RightShoulder].y},
                                    {kp[JointId::LeftHip].x, kp[JointId::LeftHip].y},
                                    {kp[JointId::RightHip].x, kp[JointId::RightHip].y}};
      const auto s = random_similarity(rng);
      std::vector<Point2> dst;
      for (const auto& p : src) dst.push_back(s.apply(p));
      check_params(fit_similarity(src, dst), s.a, s.b, s.tx, s.ty, 1e-9);
    }
  }

  TEST_CASE("least squares beats perturbed parameters") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0, 1);
    std::vector<Point2> src, dst;
    for (int i = 0; i < 6; ++i) {
      src.push_back({n(rng) * 10, n(rng) * 10});
      dst.push_back({n(rng) * 10, n(rng) * 10});
    }
    const auto t = fit_similarity(src, dst);
    auto cost = [&](const SimilarityTransform& c) {
      double e = 0;
      for (std::size_t i = 0; i < src.size(); ++i) {
        const auto q = c.apply(src[i]);
        e += (q.x - dst[i].x) * (q.x - dst[i].x) + (q.y - dst[i].y) * (q.y - dst[i].y);
      }
      return e;
    };
    const double best = cost(t);
    for (double SimilarityTransform::*m : {&SimilarityTransform::a, &SimilarityTransform::b, &SimilarityTransform::tx,
                                           &SimilarityTransform::ty})
      for (double d : {-1e-3, 1e-3}) {
        SimilarityTransform p = t;
        p.*m += d;
        CHECK(cost(p) > best);
      }
  }

  TEST_CASE("fit errors and degeneracy") {
    const std::vector<Point2> one{{1, 1}};
    CHECK_THROWS_AS(fit_similarity(one, one), InvalidInput);
    const std::vector<Point2> a{{1, 1}, {2, 2}}, b{{1, 1}};
    CHECK_THROWS_AS(fit_similarity(a, b), InvalidInput);
    const std::vector<Point2> same{{3, 4}, {3, 4}, {3, 4}};
    const std::vector<Point2> dst{{0, 0}, {2, 2}, {4, 5}};
    check_params(fit_similarity(same, dst), 1, 0, 2.0 - 3.0, 7.0 / 3.0 - 4.0);
  }

  TEST_CASE("fit is rigid-motion consistent in scale") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> n(0, 5);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<Point2> src, dst, rs, rd;
      for (int i = 0; i < 4; ++i) {
        src.push_back({n(rng), n(rng)});
        dst.push_back({n(rng), n(rng)});
      }
      const auto r = SimilarityTransform::from_scale_rotation(1.0, n(rng), n(rng), n(rng));
      for (int i = 0; i < 4; ++i) {
        rs.push_back(r.apply(src[i]));
        rd.push_back(r.apply(dst[i]));
      }
      CHECK(fit_similarity(rs, rd).scale() == doctest::Approx(fit_similarity(src, dst).scale()).epsilon(1e-9));
    }
  }

  TEST_CASE("invert") {
    check_params(invert(SimilarityTransform::identity()), 1, 0, 0, 0);
    check_params(invert({1, 0, 5, -3}), 1, 0, -5, 3);
    const SimilarityTransform t{0, 1, 2, 3};
    const auto p = invert(t).apply(t.apply({7, 7}));
    CHECK(std::abs(p.x - 7) < 1e-12);
    CHECK(std::abs(p.y - 7) < 1e-12);
    CHECK_THROWS_AS(invert({0, 0, 1, 1}), DegenerateTransform);
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 100; ++trial) {
      const auto s = random_similarity(rng);
      const auto ii = invert(invert(s));
      check_params(ii, s.a, s.b, s.tx, s.ty, 1e-12);
      const auto id = compose(invert(s), s);
      check_params(id, 1, 0, 0, 0, 1e-12);
    }
  }

  TEST_CASE("part transforms sample backwards") {
    std::mt19937_64 rng(1);
    const Keypoints ps = standing_pose(64, rng, 0.02);
    const auto same = compute_part_transforms(ps, ps, part_scheme());
    REQUIRE(same.size() == 10);
    for (const auto& t : same) check_params(t, 1, 0, 0, 0, 1e-12);
    Keypoints pt = ps;
    for (auto& j : pt.joints) j.x += 10;
    const auto shift = compute_part_transforms(ps, pt, part_scheme());
    for (const auto& t : shift) check_params(t, 1, 0, -10, 0, 1e-9);
    // A dot at a source joint reappears at the shifted target location.
    Tensor<double> dot(1, 1, 64, 64);
    const int jx = static_cast<int>(std::lround(ps[JointId::LeftElbow].x));
    const int jy = static_cast<int>(std::lround(ps[JointId::LeftElbow].y));
    dot.at(0, 0, jy, jx) = 1.0;
    const auto w = warp_bilinear(dot, shift[1]);
    CHECK(w.at(0, 0, jy, jx + 10) == doctest::Approx(1.0));
  }

  TEST_CASE("warp examples") {
    std::mt19937_64 rng(21);
    const auto img = random_tensor<double>({1, 3, 9, 7}, rng);
    const auto id = warp_bilinear(img, SimilarityTransform::identity());
    for (std::size_t i = 0; i < img.size(); ++i) CHECK(id.data()[i] == img.data()[i]);

    const auto sh = warp_bilinear(img, SimilarityTransform::translation(1, 0));
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 7; ++x) CHECK(sh.at(0, c, y, x) == (x + 1 < 7 ? img.at(0, c, y, x + 1) : 0.0));

    Tensor<double> tiny(1, 1, 1, 2);
    tiny.at(0, 0, 0, 1) = 1.0;
    CHECK(warp_bilinear(tiny, SimilarityTransform::translation(0.5, 0)).at(0, 0, 0, 0) == doctest::Approx(0.5));
    CHECK(warp_oracle(tiny, SimilarityTransform::translation(0.5, 0)).at(0, 0, 0, 0) == doctest::Approx(0.5));
    const auto oid = warp_oracle(img, SimilarityTransform::identity());
    for (std::size_t i = 0; i < img.size(); ++i) CHECK(oid.data()[i] == img.data()[i]);
  }

  TEST_CASE("integer shifts permute pixels") {
    std::mt19937_64 rng(8);
    const auto img = random_tensor<float>({2, 2, 12, 10}, rng);
    for (auto [dx, dy] : {std::pair{-3, 2}, {4, -1}, {0, 5}}) {
      const auto w = warp_bilinear(img, SimilarityTransform::translation(dx, dy));
      for (int n = 0; n < 2; ++n)
        for (int c = 0; c < 2; ++c)
          for (int y = 0; y < 12; ++y)
            for (int x = 0; x < 10; ++x) {
              const int sx = x + dx, sy = y + dy;
              const bool in = sx >= 0 && sx < 10 && sy >= 0 && sy < 12;
              CHECK(w.at(n, c, y, x) == (in ? img.at(n, c, sy, sx) : 0.0f));
            }
    }
  }

  TEST_CASE("warp is linear") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 10; ++trial) {
      const auto a = random_tensor<double>({1, 3, 16, 16}, rng), b = random_tensor<double>({1, 3, 16, 16}, rng);
      const auto t = SimilarityTransform::from_scale_rotation(1.1, 0.3, 1.7, -2.2);
      Tensor<double> mix(a.shape());
      for (std::size_t i = 0; i < a.size(); ++i) mix.data()[i] = 0.3 * a.data()[i] - 1.7 * b.data()[i];
      const auto wm = warp_bilinear(mix, t), wa = warp_bilinear(a, t), wb = warp_bilinear(b, t);
      for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(std::abs(wm.data()[i] - (0.3 * wa.data()[i] - 1.7 * wb.data()[i])) < 1e-12);
    }
  }

  TEST_CASE("warp gradient is the adjoint") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 10; ++trial) {
      const auto x = random_tensor<double>({1, 2, 11, 13}, rng), g = random_tensor<double>({1, 2, 11, 13}, rng);
      const auto t = SimilarityTransform::from_scale_rotation(0.9, -0.4, 2.5, 1.25);
      const auto wx = warp_bilinear(x, t), gt = warp_bilinear_grad(g, t, x.shape());
      double lhs = 0, rhs = 0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        lhs += wx.data()[i] * g.data()[i];
        rhs += x.data()[i] * gt.data()[i];
      }
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
    const auto g = random_tensor<double>({1, 1, 5, 5}, rng);
    const auto same = warp_bilinear_grad(g, SimilarityTransform::identity(), g.shape());
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(same.data()[i] == g.data()[i]);
    const auto gone = warp_bilinear_grad(g, SimilarityTransform::translation(100, 0), g.shape());
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(gone.data()[i] == 0.0);
    CHECK_THROWS_AS(warp_bilinear_grad(g, SimilarityTransform::identity(), Shape{1, 1, 4, 5}), InvalidInput);
  }
}
