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
#include "core/features.hpp"
#include "core/losses.hpp"
#include "support.hpp"

using namespace posesynth;
using posesynth::testing::random_tensor;
using posesynth::testing::rel_error;

namespace {

double l1_oracle(const Tensor<double>& a, const Tensor<double>& b) {
  const Shape s = a.shape();
  double sum = 0;
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x) sum += std::abs(a.at(n, c, y, x) - b.at(n, c, y, x));
  return sum / static_cast<double>(s.size());
}

FeatureExtractor<double> fitted_phi(std::mt19937_64& rng) {
  auto phi = FeatureExtractor<double>::random_fixed(5, 4);
  std::vector<Tensor<double>> sample;
  for (int k = 0; k < 3; ++k) sample.push_back(random_tensor<double>({1, 3, 32, 32}, rng));
  phi.fit_stats(sample);
  return phi;
}

// Central-difference check of dL/dy on a few random elements.
template <typename F>
void check_image_gradient(const Tensor<double>& y, const Tensor<double>& g, F&& loss, std::mt19937_64& rng,
                          int count = 8, double tol = 1e-4) {
  for (int k = 0; k < count; ++k) {
    const std::size_t i = std::uniform_int_distribution<std::size_t>(0, y.size() - 1)(rng);
    Tensor<double> up = y, dn = y;
    const double h = 1e-6;
    up.data()[i] += h;
    dn.data()[i] -= h;
    const double numeric = (loss(up) - loss(dn)) / (2 * h);
    INFO("element ", i, " analytic ", g.data()[i], " numeric ", numeric);
    CHECK(rel_error(g.data()[i], numeric) < tol);
  }
}

}  // namespace

TEST_SUITE("losses") {
  TEST_CASE("loss mode names") {
    CHECK(parse_loss_mode("l1") == LossMode::L1);
    CHECK(parse_loss_mode("vgg") == LossMode::Vgg);
    CHECK(parse_loss_mode("vgg+gan") == LossMode::VggGan);
    CHECK(loss_mode_name(LossMode::VggGan) == "vgg+gan");
    CHECK_THROWS_AS(parse_loss_mode("gan"), InvalidInput);
  }

  TEST_CASE("l1 examples and oracle") {
    std::mt19937_64 rng(1);
    const auto x = random_tensor<double>({2, 3, 16, 16}, rng);
    CHECK(loss_l1(x, x) == 0.0);
    Tensor<double> shifted = x;
    for (std::size_t i = 0; i < x.size(); ++i) shifted.data()[i] += 0.5;
    CHECK(loss_l1(shifted, x) == doctest::Approx(0.5).epsilon(1e-12));
    for (int trial = 0; trial < 100; ++trial) {
      const auto a = random_tensor<double>({1, 3, 13, 11}, rng), b = random_tensor<double>({1, 3, 13, 11}, rng);
      CHECK(std::abs(loss_l1(a, b) - l1_oracle(a, b)) < 1e-7);
      CHECK(loss_l1(a, b) >= 0.0);
    }
    CHECK_THROWS_AS(loss_l1(x, Tensor<double>(1, 3, 16, 16)), InvalidInput);
  }

  TEST_CASE("l1 gradient") {
    std::mt19937_64 rng(2);
    const auto y = random_tensor<double>({1, 3, 8, 8}, rng), t = random_tensor<double>({1, 3, 8, 8}, rng);
    Tensor<double> g;
    (void)loss_l1(y, t, &g);
    check_image_gradient(y, g, [&](const Tensor<double>& v) { return loss_l1(v, t); }, rng);
  }

  TEST_CASE("vgg loss identities") {
    std::mt19937_64 rng(3);
    const auto phi = fitted_phi(rng);
    const auto a = random_tensor<double>({1, 3, 32, 32}, rng), b = random_tensor<double>({1, 3, 32, 32}, rng);
    CHECK(loss_vgg(a, a, phi) == 0.0);
    CHECK(loss_vgg(a, b, phi) == doctest::Approx(loss_vgg(b, a, phi)).epsilon(1e-14));
    CHECK(loss_vgg(a, b, phi) > 0.0);
    const auto unfitted = FeatureExtractor<double>::random_fixed(5, 4);
    CHECK_THROWS_AS(loss_vgg(a, b, unfitted), InvalidState);
  }

  TEST_CASE("doubling a channel's std halves its contribution") {
    std::mt19937_64 rng(4);
    auto phi = fitted_phi(rng);
    const auto a = random_tensor<double>({1, 3, 32, 32}, rng), b = random_tensor<double>({1, 3, 32, 32}, rng);
    const auto fa = phi.features(a), fb = phi.features(b);
    REQUIRE(fa.size() == 16);
    std::size_t total = 0;
    for (const auto& f : fa) total += f.size();
    // Pick a channel with non-zero difference in layer 6.
    const int layer = 6;
    int channel = -1;
    double raw = 0;
    for (int c = 0; c < fa[layer].c() && channel < 0; ++c) {
      double s = 0;
      for (std::size_t i = 0; i < fa[layer].shape().plane(); ++i)
        s += std::abs(fa[layer].plane(0, c)[i] - fb[layer].plane(0, c)[i]);
      if (s > 0) {
        channel = c;
        raw = s;
      }
    }
    REQUIRE(channel >= 0);
    const double contribution = raw / phi.stats().std[layer][channel] / static_cast<double>(total);
    const double before = phi.loss(a, b);
    auto stats = phi.stats();
    stats.std[layer][channel] *= 2;
    phi.set_stats(stats);
    CHECK(before - phi.loss(a, b) == doctest::Approx(contribution / 2).epsilon(1e-9));
  }

  TEST_CASE("feature statistics") {
    std::mt19937_64 rng(5);
    auto phi = FeatureExtractor<double>::random_fixed(7, 4);
    const auto img = random_tensor<double>({1, 3, 32, 32}, rng);
    const std::vector<Tensor<double>> one{img};
    phi.fit_stats(one);
    const auto f = phi.features(img);
    for (int l = 0; l < kFeatureLayers; ++l)
      for (int c = 0; c < f[l].c(); ++c) {
        double m = 0, sq = 0;
        const std::size_t n = f[l].shape().plane();
        for (std::size_t i = 0; i < n; ++i) m += f[l].plane(0, c)[i];
        m /= n;
        for (std::size_t i = 0; i < n; ++i) sq += (f[l].plane(0, c)[i] - m) * (f[l].plane(0, c)[i] - m);
        const double sd = std::sqrt(sq / n);
        CHECK(phi.stats().mean[l][c] == doctest::Approx(m).epsilon(1e-10));
        CHECK(phi.stats().std[l][c] == doctest::Approx(std::max(sd, kFeatureStdFloor)).epsilon(1e-6));
        CHECK(phi.stats().std[l][c] >= kFeatureStdFloor);
      }
    auto dup = phi;
    const auto img2 = random_tensor<double>({1, 3, 32, 32}, rng);
    const std::vector<Tensor<double>> two{img, img2}, four{img, img2, img, img2};
    phi.fit_stats(two);
    dup.fit_stats(four);
    for (int l = 0; l < kFeatureLayers; ++l)
      for (std::size_t c = 0; c < phi.stats().mean[l].size(); ++c) {
        CHECK(dup.stats().mean[l][c] == doctest::Approx(phi.stats().mean[l][c]).epsilon(1e-12));
        CHECK(dup.stats().std[l][c] == doctest::Approx(phi.stats().std[l][c]).epsilon(1e-9));
      }
    CHECK_THROWS_AS(phi.fit_stats(std::span<const Tensor<double>>()), InvalidInput);
  }

  TEST_CASE("a channel that never fires gets the floor") {
    // All-black images: the deepest ReLU channels of a narrow random stack see
    // only padding-driven values, and any exactly-constant channel must report
    // the floor instead of zero.
    auto phi = FeatureExtractor<double>::random_fixed(3, 4);
    const std::vector<Tensor<double>> black{Tensor<double>(1, 3, 16, 16, -1.0)};
    phi.fit_stats(black);
    const auto f = phi.features(black[0]);
    int constant = 0;
    for (int l = 0; l < kFeatureLayers; ++l)
      for (int c = 0; c < f[l].c(); ++c) {
        const double* p = f[l].plane(0, c);
        if (std::all_of(p, p + f[l].shape().plane(), [&](double v) { return v == p[0]; })) {
          ++constant;
          CHECK(phi.stats().std[l][c] == kFeatureStdFloor);
        }
      }
    CHECK(constant > 0);
  }

  TEST_CASE("vgg gradient") {
    std::mt19937_64 rng(6);
    const auto phi = fitted_phi(rng);
    const auto y = random_tensor<double>({1, 3, 32, 32}, rng), t = random_tensor<double>({1, 3, 32, 32}, rng);
    Tensor<double> g;
    (void)loss_vgg(y, t, phi, &g);
    check_image_gradient(y, g, [&](const Tensor<double>& v) { return loss_vgg(v, t, phi); }, rng);
  }

  TEST_CASE("gan values") {
    const std::vector<double> half{0.5, 0.5, 0.5};
    CHECK(std::abs(gan_d_from_probabilities(half, half) - 2 * std::log(2.0)) < 1e-9);
    CHECK(std::abs(gan_g_from_probabilities(half) - std::log(2.0)) < 1e-9);
    CHECK(std::abs(gan_g_from_probabilities(half, true) - std::log(0.5)) < 1e-9);
    const std::vector<double> one{1.0}, zero{0.0};
    const double perfect = gan_d_from_probabilities(one, zero);
    CHECK(perfect == doctest::Approx(-2 * std::log(1 - 1e-7)).epsilon(1e-6));
    CHECK(perfect == doctest::Approx(2e-7).epsilon(1e-6));
    CHECK(clamp_probability(0.0) == 1e-7);
    CHECK(clamp_probability(1.0) == 1 - 1e-7);
    CHECK(std::isfinite(gan_g_from_probabilities(zero)));
  }

  TEST_CASE("gan_d falls as D grows confident on real inputs") {
    const std::vector<double> fake{0.3};
    double last = 1e300;
    for (double p : {0.2, 0.5, 0.8}) {
      const std::vector<double> real{p};
      const double v = gan_d_from_probabilities(real, fake);
      CHECK(v < last);
      CHECK(v >= 0.0);
      last = v;
    }
  }

  TEST_CASE("combined objective") {
    CHECK(loss_combined(0.2, 0.7, 0.1) == doctest::Approx(0.27).epsilon(1e-12));
    CHECK(loss_combined(0.2, 0.7, 0.0) == 0.2);
    CHECK(kDefaultGanWeight == 0.1);
  }

  TEST_CASE("discriminator gradients") {
    std::mt19937_64 rng(7);
    nn::Network<double> d(nn::discriminator_spec(4), 64, 64, 3, nn::InitScheme::HeNormal);
    const auto real = random_tensor<double>({2, 3, 64, 64}, rng), fake = random_tensor<double>({2, 3, 64, 64}, rng);
    const auto heat = random_tensor<double>({2, 14, 64, 64}, rng, 0, 1);
    auto gan_d = [&] {
      const auto pr = discriminator_probabilities(d, real, heat), pf = discriminator_probabilities(d, fake, heat);
      return gan_d_from_probabilities(pr, pf);
    };
    d.zero_grad();
    const double v = gan_d_step_gradients(d, real, fake, heat);
    CHECK(v == doctest::Approx(gan_d()).epsilon(1e-12));
    auto& params = d.parameters();
    auto& p = params[params.size() - 2];  // final dense weights
    REQUIRE(p.dims.size() > 1);
    for (std::size_t i : {std::size_t{0}, std::size_t{7}, p.value.size() - 1}) {
      const double orig = p.value[i], h = 1e-6;
      p.value[i] = orig + h;
      const double up = gan_d();
      p.value[i] = orig - h;
      const double dn = gan_d();
      p.value[i] = orig;
      if (std::abs(p.grad[i]) > 1e-9) CHECK(rel_error(p.grad[i], (up - dn) / (2 * h)) < 1e-4);
    }

    for (bool saturating : {false, true}) {
      Tensor<double> g;
      d.zero_grad();
      const double gg = gan_g_gradients(d, fake, heat, saturating, &g);
      CHECK(gg == doctest::Approx(gan_g_from_probabilities(discriminator_probabilities(d, fake, heat), saturating)));
      CHECK(g.shape() == fake.shape());
      check_image_gradient(fake, g,
                           [&](const Tensor<double>& y) {
                             return gan_g_from_probabilities(discriminator_probabilities(d, y, heat), saturating);
                           },
                           rng, 4);
    }
  }
}
