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
#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "core/pose.hpp"
#include "core/tensor.hpp"

namespace posesynth {

/// (x, y) -> (a x - b y + tx, b x + a y + ty): rotation by atan2(b, a),
/// uniform scale sqrt(a^2 + b^2), then translation.
struct SimilarityTransform {
  double a = 1.0;
  double b = 0.0;
  double tx = 0.0;
  double ty = 0.0;

  static SimilarityTransform identity() { return {}; }
  static SimilarityTransform translation(double dx, double dy) { return {1.0, 0.0, dx, dy}; }
  static SimilarityTransform from_scale_rotation(double scale, double theta, double dx, double dy) {
    return {scale * std::cos(theta), scale * std::sin(theta), dx, dy};
  }

  [[nodiscard]] double scale() const { return std::hypot(a, b); }
  [[nodiscard]] double rotation() const { return std::atan2(b, a); }
  [[nodiscard]] Point2 apply(Point2 p) const { return {a * p.x - b * p.y + tx, b * p.x + a * p.y + ty}; }
  /// Row-major 2x3 matrix.
  [[nodiscard]] std::array<double, 6> matrix() const { return {a, -b, tx, b, a, ty}; }
};

/// this(other(p)).
SimilarityTransform compose(const SimilarityTransform& outer, const SimilarityTransform& inner);

/// Least-squares similarity taking src[i] to dst[i]. Coincident source points
/// fall back to the translation between centroids (rotation and scale are
/// unobservable from a single distinct point).
SimilarityTransform fit_similarity(std::span<const Point2> src, std::span<const Point2> dst);

/// Throws DegenerateTransform when the scale is zero.
SimilarityTransform invert(const SimilarityTransform& t);

/// Backward-sampling transforms, one per part: maps target-pose joint
/// coordinates onto source-pose coordinates, so output pixel (x, y) of a
/// warped layer samples the source layer at T(x, y).
std::vector<SimilarityTransform> compute_part_transforms(const Keypoints& source, const Keypoints& target,
                                                         const PartScheme& scheme);

/// Bilinear backward warp of every channel of every sample. Samples falling
/// outside the image contribute zero.
template <typename T>
Tensor<T> warp_bilinear(const Tensor<T>& layer, const SimilarityTransform& t);

/// Adjoint of warp_bilinear with respect to the input layer (the transform is
/// not differentiated). `input_shape` is the shape of the forward input.
template <typename T>
Tensor<T> warp_bilinear_grad(const Tensor<T>& upstream, const SimilarityTransform& t, const Shape& input_shape);

/// Direct per-pixel evaluation of the four-neighbour interpolation sum, kept
/// free of any code shared with warp_bilinear so each can check the other.
template <typename T>
Tensor<T> warp_oracle(const Tensor<T>& layer, const SimilarityTransform& t);

}  // namespace posesynth
