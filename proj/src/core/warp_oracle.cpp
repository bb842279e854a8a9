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
// Brute-force reference for the bilinear warp:
//   W(x, y) = sum over the four integer neighbours q of (x', y') of
//             I(q) (1 - |x' - q_x|) (1 - |y' - q_y|),   (x', y') = T(x, y).

#include <cmath>

#include "core/geometry.hpp"

namespace posesynth {

template <typename T>
Tensor<T> warp_oracle(const Tensor<T>& layer, const SimilarityTransform& t) {
  Tensor<T> out(layer.shape());
  const int h = layer.h(), w = layer.w();
  for (int n = 0; n < layer.n(); ++n) {
    for (int c = 0; c < layer.c(); ++c) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const double xp = t.a * x - t.b * y + t.tx;
          const double yp = t.b * x + t.a * y + t.ty;
          const double qx0 = std::floor(xp), qy0 = std::floor(yp);
          double sum = 0.0;
          for (double qy = qy0; qy <= qy0 + 1.0; qy += 1.0) {
            for (double qx = qx0; qx <= qx0 + 1.0; qx += 1.0) {
              if (qx < 0.0 || qy < 0.0 || qx > w - 1 || qy > h - 1) continue;
              const double weight = (1.0 - std::abs(xp - qx)) * (1.0 - std::abs(yp - qy));
              sum += static_cast<double>(layer.at(n, c, static_cast<int>(qy), static_cast<int>(qx))) * weight;
            }
          }
          out.at(n, c, y, x) = static_cast<T>(sum);
        }
      }
    }
  }
  return out;
}

template Tensor<float> warp_oracle<float>(const Tensor<float>&, const SimilarityTransform&);
template Tensor<double> warp_oracle<double>(const Tensor<double>&, const SimilarityTransform&);

}  // namespace posesynth
