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

#include <cstdint>
#include <filesystem>

#include "core/tensor.hpp"

namespace posesynth {

/// 8-bit value v maps to v / 127.5 - 1, so 0 -> -1 and 255 -> 1.
inline float decode_pixel(std::uint8_t v) { return static_cast<float>(v) / 127.5f - 1.0f; }
/// Clamps to [-1, 1] and rounds to the nearest 8-bit level.
std::uint8_t encode_pixel(double v);
/// Clamps to [0, 1] and rounds to the nearest 8-bit level.
std::uint8_t encode_unit(double v);

/// PNG to [1, 3, H, W] in [-1, 1]. Grey, palette and alpha inputs are
/// converted to RGB. Throws IoError when the file cannot be opened and
/// DecodeError when it is not a readable PNG.
Tensor<float> read_image(const std::filesystem::path& path);

/// Writes sample 0 of a [N, 3, H, W] tensor in [-1, 1] as 8-bit RGB PNG.
void write_image(const std::filesystem::path& path, const Tensor<float>& image);

/// Writes sample 0, channel `channel` of a tensor in [0, 1] as 8-bit grey PNG.
void write_unit_image(const std::filesystem::path& path, const Tensor<float>& map, int channel = 0);

}  // namespace posesynth
