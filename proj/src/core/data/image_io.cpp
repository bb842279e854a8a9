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
#include "core/data/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

namespace posesynth {

std::uint8_t encode_pixel(double v) {
  if (std::isnan(v)) v = -1.0;
  const double c = std::clamp(v, -1.0, 1.0);
  return static_cast<std::uint8_t>(std::lround((c + 1.0) * 127.5));
}

std::uint8_t encode_unit(double v) {
  if (std::isnan(v)) v = 0.0;
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

namespace {

void write_png(const std::filesystem::path& path, int width, int height, std::uint32_t format,
               const std::vector<std::uint8_t>& pixels) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(width);
  img.height = static_cast<png_uint_32>(height);
  img.format = format;
  if (png_image_write_to_file(&img, path.c_str(), 0, pixels.data(), 0, nullptr) == 0) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw IoError(path.string() + ": cannot write PNG: " + msg);
  }
}

}  // namespace

Tensor<float> read_image(const std::filesystem::path& path) {
  {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError(path.string() + ": cannot open image");
  }
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_file(&img, path.c_str()) == 0) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw DecodeError(path.string() + ": not a readable PNG image (" + msg + ")");
  }
  img.format = PNG_FORMAT_RGB;
  const int w = static_cast<int>(img.width), h = static_cast<int>(img.height);
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
  if (png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr) == 0) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw DecodeError(path.string() + ": corrupt PNG image (" + msg + ")");
  }
  Tensor<float> out(1, 3, h, w);
  for (int c = 0; c < 3; ++c) {
    float* d = out.plane(0, c);
    for (std::size_t i = 0; i < out.shape().plane(); ++i) d[i] = decode_pixel(buf[3 * i + c]);
  }
  return out;
}

void write_image(const std::filesystem::path& path, const Tensor<float>& image) {
  if (image.c() != 3 || image.n() < 1) throw InvalidInput("write_image expects [N,3,H,W], got " + image.shape().str());
  const std::size_t hw = image.shape().plane();
  std::vector<std::uint8_t> buf(3 * hw);
  for (int c = 0; c < 3; ++c) {
    const float* s = image.plane(0, c);
    for (std::size_t i = 0; i < hw; ++i) buf[3 * i + c] = encode_pixel(s[i]);
  }
  write_png(path, image.w(), image.h(), PNG_FORMAT_RGB, buf);
}

void write_unit_image(const std::filesystem::path& path, const Tensor<float>& map, int channel) {
  if (channel < 0 || channel >= map.c() || map.n() < 1)
    throw InvalidInput("write_unit_image: channel " + std::to_string(channel) + " of " + map.shape().str());
  const std::size_t hw = map.shape().plane();
  std::vector<std::uint8_t> buf(hw);
  const float* s = map.plane(0, channel);
  for (std::size_t i = 0; i < hw; ++i) buf[i] = encode_unit(s[i]);
  write_png(path, map.w(), map.h(), PNG_FORMAT_GRAY, buf);
}

}  // namespace posesynth
