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
#include "core/metrics.hpp"
#include "support.hpp"

using namespace posesynth;
using posesynth::testing::random_tensor;

namespace {

// SSIM straight from the definition: explicit 2-D Gaussian window at every
// valid position, no separable filtering.
double ssim_oracle(const Tensor<double>& a, const Tensor<double>& b) {
  const int r = 5;
  double wsum = 0;
  double win[11][11];
  for (int i = -r; i <= r; ++i)
    for (int j = -r; j <= r; ++j) {
      win[i + r][j + r] = std::exp(-(i * i + j * j) / (2 * 1.5 * 1.5));
      wsum += win[i + r][j + r];
    }
  const double c1 = 0.0001, c2 = 0.0009;
  double total = 0;
  for (int c = 0; c < a.c(); ++c) {
    double acc = 0;
    int count = 0;
    for (int y = r; y < a.h() - r; ++y)
      for (int x = r; x < a.w() - r; ++x) {
        double mx = 0, my = 0;
        for (int i = -r; i <= r; ++i)
          for (int j = -r; j <= r; ++j) {
            const double w = win[i + r][j + r] / wsum;
            mx += w * a.at(0, c, y + i, x + j);
            my += w * b.at(0, c, y + i, x + j);
          }
        double vx = 0, vy = 0, cov = 0;
        for (int i = -r; i <= r; ++i)
          for (int j = -r; j <= r; ++j) {
            const double w = win[i + r][j + r] / wsum;
            const double dx = a.at(0, c, y + i, x + j) - mx, dy = b.at(0, c, y + i, x + j) - my;
            vx += w * dx * dx;
            vy += w * dy * dy;
            cov += w * dx * dy;
          }
        acc += ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
        ++count;
      }
    total += acc / count;
  }
  return total / a.c();
}

double l1_oracle(const Tensor<double>& a, const Tensor<double>& b) {
  double s = 0;
  for (int c = 0; c < a.c(); ++c)
    for (int y = 0; y < a.h(); ++y)
      for (int x = 0; x < a.w(); ++x) s += std::abs(a.at(0, c, y, x) - b.at(0, c, y, x));
  return s / (a.c() * a.h() * a.w());
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("to_unit") {
    Tensor<float> t(1, 1, 1, 3);
    t.data()[0] = -1.0f;
    t.data()[1] = 0.0f;
    t.data()[2] = 1.0f;
    const auto u = to_unit(t);
    CHECK(u.data()[0] == 0.0);
    CHECK(u.data()[1] == 0.5);
    CHECK(u.data()[2] == 1.0);
  }

  TEST_CASE("metrics match brute-force oracles on random 32x32 pairs") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      const auto a = random_tensor<double>({1, 3, 32, 32}, rng, 0, 1);
      auto b = a;
      std::normal_distribution<double> noise(0, 0.1 + 0.02 * trial);
      for (std::size_t i = 0; i < b.size(); ++i) b.data()[i] = std::clamp(b.data()[i] + noise(rng), 0.0, 1.0);
      CHECK(std::abs(metric_l1(a, b) - l1_oracle(a, b)) < 1e-6);
      CHECK(std::abs(metric_ssim(a, b) - ssim_oracle(a, b)) < 1e-6);
    }
  }

  TEST_CASE("ssim identities") {
    std::mt19937_64 rng(4);
    const auto a = random_tensor<double>({1, 3, 24, 20}, rng, 0, 1), b = random_tensor<double>({1, 3, 24, 20}, rng, 0, 1);
    CHECK(metric_ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(metric_ssim(a, b) == doctest::Approx(metric_ssim(b, a)).epsilon(1e-14));
    CHECK(metric_ssim(a, b) < 0.5);
    CHECK(metric_l1(a, a) == 0.0);
    CHECK_THROWS_AS(metric_ssim(Tensor<double>(1, 1, 10, 30), Tensor<double>(1, 1, 10, 30)), InvalidInput);
    CHECK_THROWS_AS(metric_ssim(a, Tensor<double>(1, 3, 24, 21)), InvalidInput);
  }

  TEST_CASE("ssim of a constant against a shifted constant") {
    for (double c : {0.0, 0.2, 0.45}) {
      const Tensor<double> a(1, 3, 16, 16, c), b(1, 3, 16, 16, c + 0.5);
      const double closed = (2 * c * (c + 0.5) + 1e-4) / (c * c + (c + 0.5) * (c + 0.5) + 1e-4);
      CHECK(std::abs(metric_ssim(a, b) - ssim_oracle(a, b)) < 1e-6);
      CHECK(std::abs(metric_ssim(a, b) - closed) < 1e-6);
    }
  }

  TEST_CASE("gradient magnitudes") {
    Tensor<double> ramp(1, 1, 5, 6);
    for (int y = 0; y < 5; ++y)
      for (int x = 0; x < 6; ++x) ramp.at(0, 0, y, x) = 0.1 * x + 0.2 * y;
    const auto g = gradient_magnitudes(ramp);
    REQUIRE(g.size() == 30);
    for (int y = 0; y < 5; ++y)
      for (int x = 0; x < 6; ++x) {
        const bool border = x == 0 || y == 0 || x == 5 || y == 4;
        CHECK(g[y * 6 + x] == doctest::Approx(border ? 0.0 : std::hypot(0.1, 0.2)).epsilon(1e-12));
      }
  }

  TEST_CASE("gradient histogram") {
    std::mt19937_64 rng(5);
    std::vector<Tensor<double>> gt;
    for (int k = 0; k < 3; ++k) gt.push_back(random_tensor<double>({1, 3, 32, 32}, rng, 0, 1));
    const auto self = gradient_histogram(gt, gt);
    const double quantum = 1.0 / (3 * 32 * 32);
    double sum = 0;
    for (double h : self) {
      CHECK(std::abs(h - 0.25) <= quantum + 1e-12);
      sum += h;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    const std::vector<Tensor<double>> flat{Tensor<double>(1, 3, 32, 32, 0.3)};
    const auto c = gradient_histogram(flat, gt);
    CHECK(c[0] == 1.0);
    CHECK(c[1] + c[2] + c[3] == 0.0);
    CHECK_THROWS_AS(gradient_histogram(std::span<const Tensor<double>>(), gt), InvalidInput);
  }

  TEST_CASE("mean and population std") {
    const std::vector<double> v{1, 2, 3, 4};
    const auto ms = mean_std(v);
    CHECK(ms.mean == 2.5);
    CHECK(ms.std == doctest::Approx(std::sqrt(1.25)).epsilon(1e-15));
    // Compensated summation survives cancellation.
    std::vector<double> big{1e16, 1.0, -1e16, 1.0};
    CHECK(mean_std(big).mean == 0.5);
    std::vector<double> shuffled = v;
    std::reverse(shuffled.begin(), shuffled.end());
    CHECK(mean_std(shuffled).std == ms.std);
  }
}
