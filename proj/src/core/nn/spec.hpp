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

#include <cstddef>
#include <string>
#include <vector>

#include "core/nn/layers.hpp"

namespace posesynth::nn {

enum class LayerKind { Conv, Upsample, Dense, Flatten };

struct LayerSpec {
  LayerKind kind = LayerKind::Conv;
  int filters = 0;  // conv filters or dense units
  int kernel = 3;
  int stride = 1;
  Activation activation = Activation::LeakyRelu;

  static LayerSpec conv(int filters, int kernel = 3, int stride = 1, Activation act = Activation::LeakyRelu) {
    return {LayerKind::Conv, filters, kernel, stride, act};
  }
  static LayerSpec upsample() { return {LayerKind::Upsample, 0, 0, 0, Activation::Linear}; }
  static LayerSpec flatten() { return {LayerKind::Flatten, 0, 0, 0, Activation::Linear}; }
  static LayerSpec dense(int units, Activation act = Activation::LeakyRelu) {
    return {LayerKind::Dense, units, 0, 0, act};
  }
};

/// Encoder layer `encoder` (0-based) is concatenated onto the output of
/// decoder layer `decoder` (0-based, an upsample) before the next decoder conv.
struct SkipSpec {
  int encoder = 0;
  int decoder = 0;
};

enum class Topology { UNet, Sequential };

/// A UNet has encoder, decoder and 1-2 heads branching off the decoder output.
/// A sequential network keeps its layer list in `encoder`; its last layer is
/// the single output.
struct NetSpec {
  std::string name;
  Topology topology = Topology::UNet;
  int input_channels = 0;
  std::vector<LayerSpec> encoder;
  std::vector<LayerSpec> decoder;
  std::vector<SkipSpec> skips;
  std::vector<LayerSpec> heads;
  double leaky_slope = 0.2;

  void validate() const;
};

/// Hidden widths are divided by `width_divisor` (4 for the desk profile);
/// input channels and output heads are unchanged.
NetSpec segmentation_net_spec(int width_divisor = 1);
NetSpec background_net_spec(int width_divisor = 1);
NetSpec foreground_net_spec(int width_divisor = 1);
NetSpec discriminator_spec(int width_divisor = 1);

/// Count of stride-2 layers; inputs must be divisible by 2^this.
int downsample_depth(const NetSpec& spec);

/// Stable multi-line text rendering (used for golden fixtures and fingerprints).
std::string describe(const NetSpec& spec);

std::size_t parameter_count(const NetSpec& spec, int height, int width);

/// Output shapes (c, h, w) of every head for an input of the given size.
struct OutputShape {
  int c, h, w;
  bool operator==(const OutputShape&) const = default;
};
std::vector<OutputShape> output_shapes(const NetSpec& spec, int height, int width);

}  // namespace posesynth::nn
