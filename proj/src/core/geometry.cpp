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
#include "core/geometry.hpp"

#include <cmath>
#include <cstdint>

namespace posesynth {

SimilarityTransform compose(const SimilarityTransform& outer, const SimilarityTransform& inner) {
  // Complex-number view: z -> c z + t with c = a + ib.
  return {outer.a * inner.a - outer.b * inner.b, outer.a * inner.b + outer.b * inner.a,
          outer.a * inner.tx - outer.b * inner.ty + outer.tx, outer.b * inner.tx + outer.a * inner.ty + outer.ty};
}

SimilarityTransform fit_similarity(std::span<const Point2> src, std::span<const Point2> dst) {
  if (src.size() != dst.size()) throw InvalidInput("fit_similarity: point lists differ in length");
  if (src.size() < 2) throw InvalidInput("fit_similarity: at least two correspondences are required");
  const double n = static_cast<double>(src.size());

  double sx = 0.0, sy = 0.0, dx = 0.0, dy = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    sx += src[i].x;
    sy += src[i].y;
    dx += dst[i].x;
    dy += dst[i].y;
  }
  sx /= n;
  sy /= n;
  dx /= n;
  dy /= n;

  // With both sets centred the normal equations decouple:
  //   a = sum(x u + y v) / sum(x^2 + y^2),  b = sum(x v - y u) / sum(x^2 + y^2).
  double denom = 0.0, num_a = 0.0, num_b = 0.0, spread = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double x = src[i].x - sx, y = src[i].y - sy;
    const double u = dst[i].x - dx, v = dst[i].y - dy;
    denom += x * x + y * y;
    num_a += x * u + y * v;
    num_b += x * v - y * u;
    spread += src[i].x * src[i].x + src[i].y * src[i].y;
  }
  if (denom <= 1e-24 * (1.0 + spread)) return SimilarityTransform::translation(dx - sx, dy - sy);

  const double a = num_a / denom;
  const double b = num_b / denom;
  return {a, b, dx - (a * sx - b * sy), dy - (b * sx + a * sy)};
}

SimilarityTransform invert(const SimilarityTransform& t) {
  const double s2 = t.a * t.a + t.b * t.b;
  if (!(s2 > 0.0) || !std::isfinite(s2)) throw DegenerateTransform("invert: transform has zero scale");
  // z = c w + t  =>  w = conj(c) (z - t) / |c|^2
  const double ia = t.a / s2, ib = -t.b / s2;
  return {ia, ib, -(ia * t.tx - ib * t.ty), -(ib * t.tx + ia * t.ty)};
}

std::vector<SimilarityTransform> compute_part_transforms(const Keypoints& source, const Keypoints& target,
                                                         const PartScheme& scheme) {
  source.validate();
  target.validate();
  std::vector<SimilarityTransform> out;
  out.reserve(scheme.parts.size());
  for (const auto& part : scheme.parts) {
    std::vector<Point2> src, dst;
    for (JointId j : part.joints) {
      const Joint& s = source[j];
      const Joint& t = target[j];
      if (!s.present || !t.present)
        throw InvalidInput("compute_part_transforms: part '" + std::string(part.name) + "' is missing joint '" +
                           std::string(joint_name(j)) + "'");
      // Fit target -> source: the warp samples the source at T(output pixel).
      src.push_back({t.x, t.y});
      dst.push_back({s.x, s.y});
    }
    out.push_back(fit_similarity(src, dst));
  }
  return out;
}

namespace {

struct Tap {
  std::int32_t idx[4];
  double wt[4];
};

// Per output pixel: the four source indices and weights (index -1 = outside).
std::vector<Tap> build_taps(int h, int w, const SimilarityTransform& t) {
  std::vector<Tap> taps(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Point2 p = t.apply({static_cast<double>(x), static_cast<double>(y)});
      Tap& tap = taps[static_cast<std::size_t>(y) * w + x];
      for (int k = 0; k < 4; ++k) {
        tap.idx[k] = -1;
        tap.wt[k] = 0.0;
      }
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) continue;
      const double fx0 = std::floor(p.x), fy0 = std::floor(p.y);
      if (fx0 < -1.0 || fy0 < -1.0 || fx0 > w || fy0 > h) continue;
      const int x0 = static_cast<int>(fx0), y0 = static_cast<int>(fy0);
      const double ax = p.x - fx0, ay = p.y - fy0;
      const int xs[2] = {x0, x0 + 1};
      const int ys[2] = {y0, y0 + 1};
      const double wx[2] = {1.0 - ax, ax};
      const double wy[2] = {1.0 - ay, ay};
      for (int j = 0; j < 2; ++j) {
        for (int i = 0; i < 2; ++i) {
          const int k = j * 2 + i;
          if (xs[i] < 0 || xs[i] >= w || ys[j] < 0 || ys[j] >= h) continue;
          tap.idx[k] = ys[j] * w + xs[i];
          tap.wt[k] = wx[i] * wy[j];
        }
      }
    }
  }
  return taps;
}

}  // namespace

template <typename T>
Tensor<T> warp_bilinear(const Tensor<T>& layer, const SimilarityTransform& t) {
  const Shape s = layer.shape();
  Tensor<T> out(s);
  if (s.size() == 0) return out;
  const auto taps = build_taps(s.h, s.w, t);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const T* src = layer.plane(n, c);
      T* dst = out.plane(n, c);
      for (std::size_t p = 0; p < taps.size(); ++p) {
        const Tap& tap = taps[p];
        T acc = T(0);
        for (int k = 0; k < 4; ++k)
          if (tap.idx[k] >= 0) acc += src[tap.idx[k]] * static_cast<T>(tap.wt[k]);
        dst[p] = acc;
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> warp_bilinear_grad(const Tensor<T>& upstream, const SimilarityTransform& t, const Shape& input_shape) {
  if (upstream.shape() != input_shape)
    throw InvalidInput("warp_bilinear_grad: upstream " + upstream.shape().str() + " does not match input " +
                       input_shape.str());
  const Shape s = input_shape;
  Tensor<T> grad(s);
  if (s.size() == 0) return grad;
  const auto taps = build_taps(s.h, s.w, t);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const T* up = upstream.plane(n, c);
      T* g = grad.plane(n, c);
      for (std::size_t p = 0; p < taps.size(); ++p) {
        const Tap& tap = taps[p];
        for (int k = 0; k < 4; ++k)
          if (tap.idx[k] >= 0) g[tap.idx[k]] += up[p] * static_cast<T>(tap.wt[k]);
      }
    }
  }
  return grad;
}

template Tensor<float> warp_bilinear<float>(const Tensor<float>&, const SimilarityTransform&);
template Tensor<double> warp_bilinear<double>(const Tensor<double>&, const SimilarityTransform&);
template Tensor<float> warp_bilinear_grad<float>(const Tensor<float>&, const SimilarityTransform&, const Shape&);
template Tensor<double> warp_bilinear_grad<double>(const Tensor<double>&, const SimilarityTransform&,
                                                   const Shape&);

}  // namespace posesynth
