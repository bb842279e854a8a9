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
#include "core/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace posesynth {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5, kC1 = 0.01 * 0.01, kC2 = 0.03 * 0.03;

std::array<double, kWindow> gaussian_taps() {
  std::array<double, kWindow> w{};
  double s = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    w[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    s += w[i];
  }
  for (auto& v : w) v /= s;
  return w;
}

// 'valid' separable filtering of one plane.
std::vector<double> filter_valid(const double* src, int h, int w, const std::array<double, kWindow>& k) {
  const int oh = h - kWindow + 1, ow = w - kWindow + 1;
  std::vector<double> tmp(static_cast<std::size_t>(h) * ow), out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < kWindow; ++i) s += k[i] * src[y * w + x + i];
      tmp[static_cast<std::size_t>(y) * ow + x] = s;
    }
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < kWindow; ++i) s += k[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  return out;
}

}  // namespace

Tensor<double> to_unit(const Tensor<float>& image) {
  Tensor<double> out(image.shape());
  for (std::size_t i = 0; i < image.size(); ++i) out.data()[i] = 0.5 * (static_cast<double>(image.data()[i]) + 1.0);
  return out;
}

double metric_l1(const Tensor<double>& a, const Tensor<double>& b) {
  require_same_shape(a, b, "L1 metric");
  if (a.empty()) throw InvalidInput("L1 metric: empty images");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = std::abs(a.data()[i] - b.data()[i]);
  return mean_std(d).mean;
}

double metric_ssim(const Tensor<double>& a, const Tensor<double>& b) {
  require_same_shape(a, b, "SSIM");
  if (a.h() < kWindow || a.w() < kWindow) throw InvalidInput("SSIM needs images of at least 11x11");
  const auto k = gaussian_taps();
  const int h = a.h(), w = a.w();
  const std::size_t hw = a.shape().plane();
  double total = 0.0;
  int planes = 0;
  std::vector<double> aa(hw), bb(hw), ab(hw);
  for (int n = 0; n < a.n(); ++n)
    for (int c = 0; c < a.c(); ++c, ++planes) {
      const double* x = a.plane(n, c);
      const double* y = b.plane(n, c);
      for (std::size_t i = 0; i < hw; ++i) {
        aa[i] = x[i] * x[i];
        bb[i] = y[i] * y[i];
        ab[i] = x[i] * y[i];
      }
      const auto mx = filter_valid(x, h, w, k), my = filter_valid(y, h, w, k);
      const auto sxx = filter_valid(aa.data(), h, w, k), syy = filter_valid(bb.data(), h, w, k),
                 sxy = filter_valid(ab.data(), h, w, k);
      std::vector<double> vals(mx.size());
      for (std::size_t i = 0; i < mx.size(); ++i) {
        const double vx = sxx[i] - mx[i] * mx[i], vy = syy[i] - my[i] * my[i], cxy = sxy[i] - mx[i] * my[i];
        vals[i] = ((2 * mx[i] * my[i] + kC1) * (2 * cxy + kC2)) /
                  ((mx[i] * mx[i] + my[i] * my[i] + kC1) * (vx + vy + kC2));
      }
      total += mean_std(vals).mean;
    }
  return total / planes;
}

std::vector<double> gradient_magnitudes(const Tensor<double>& image) {
  if (image.c() != 3 && image.c() != 1) throw InvalidInput("gradient magnitudes need 1 or 3 channels");
  const int h = image.h(), w = image.w();
  std::vector<double> out;
  out.reserve(image.size() / image.c());
  std::vector<double> lum(static_cast<std::size_t>(h) * w);
  for (int n = 0; n < image.n(); ++n) {
    for (std::size_t i = 0; i < lum.size(); ++i)
      lum[i] = image.c() == 1 ? image.plane(n, 0)[i]
                              : 0.299 * image.plane(n, 0)[i] + 0.587 * image.plane(n, 1)[i] +
                                    0.114 * image.plane(n, 2)[i];
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (y == 0 || x == 0 || y == h - 1 || x == w - 1) {
          out.push_back(0.0);
          continue;
        }
        const double gx = 0.5 * (lum[y * w + x + 1] - lum[y * w + x - 1]);
        const double gy = 0.5 * (lum[(y + 1) * w + x] - lum[(y - 1) * w + x]);
        out.push_back(std::sqrt(gx * gx + gy * gy));
      }
  }
  return out;
}

std::array<double, 4> gradient_histogram(std::span<const Tensor<double>> images,
                                         std::span<const Tensor<double>> gt_images) {
  if (images.empty() || gt_images.empty()) throw InvalidInput("gradient histogram: empty input");
  std::vector<double> gt;
  for (const auto& g : gt_images) {
    const auto m = gradient_magnitudes(g);
    gt.insert(gt.end(), m.begin(), m.end());
  }
  std::sort(gt.begin(), gt.end());
  const std::size_t n = gt.size();
  const std::array<double, 3> edges{gt[n / 4], gt[n / 2], gt[(3 * n) / 4]};
  std::array<double, 4> counts{};
  double total = 0.0;
  for (const auto& img : images) {
    for (double g : gradient_magnitudes(img)) {
      int bin = 0;
      for (double e : edges) bin += g > e ? 1 : 0;
      counts[bin] += 1.0;
      total += 1.0;
    }
  }
  for (auto& c : counts) c /= total;
  return counts;
}

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) return {};
  auto neumaier = [](std::span<const double> v, auto f) {
    double sum = 0.0, comp = 0.0;
    for (double x : v) {
      const double t = sum + f(x);
      comp += std::abs(sum) >= std::abs(f(x)) ? (sum - t) + f(x) : (f(x) - t) + sum;
      sum = t;
    }
    return sum + comp;
  };
  const double n = static_cast<double>(values.size());
  const double mean = neumaier(values, [](double x) { return x; }) / n;
  const double var = neumaier(values, [mean](double x) { return (x - mean) * (x - mean); }) / n;
  return {mean, std::sqrt(var)};
}

}  // namespace posesynth
