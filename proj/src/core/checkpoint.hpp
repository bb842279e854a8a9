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

// Self-describing tensor container used for model checkpoints, feature
// statistics and external VGG19 weights.
//
// Layout (little-endian):
//   "PSYNCKPT"            8-byte magic
//   u32 format_version    currently 1
//   str kind              e.g. "posesynth.model", "posesynth.vgg19"
//   str fingerprint
//   str metadata          JSON text
//   u32 record_count
//   record*               str name, u8 dtype (1 = f32, 2 = f64), u32 rank,
//                         i64 dims[rank], u64 byte_count, raw data
//   u64 checksum          FNV-1a over every preceding byte
// where str is a u32 byte length followed by UTF-8 bytes.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/error.hpp"

namespace posesynth {

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

class Container {
 public:
  enum class DType : std::uint8_t { F32 = 1, F64 = 2 };

  struct Record {
    DType dtype = DType::F32;
    std::vector<std::int64_t> dims;
    std::vector<std::uint8_t> bytes;

    [[nodiscard]] std::size_t count() const;
  };

  std::string kind;
  std::string fingerprint;
  nlohmann::json metadata = nlohmann::json::object();

  void put(const std::string& name, std::vector<std::int64_t> dims, std::span<const float> values);
  void put(const std::string& name, std::vector<std::int64_t> dims, std::span<const double> values);

  [[nodiscard]] bool has(const std::string& name) const { return records_.count(name) != 0; }
  [[nodiscard]] const Record& at(const std::string& name) const;
  [[nodiscard]] const std::map<std::string, Record>& records() const { return records_; }

  /// Converts to T when the stored dtype differs. Checks the element count
  /// against `expected_count` when it is non-zero.
  template <typename T>
  [[nodiscard]] std::vector<T> get(const std::string& name, std::size_t expected_count = 0) const;

  void save(const std::filesystem::path& path) const;
  /// Throws IoError for a missing file and DecodeError for a corrupt one.
  static Container load(const std::filesystem::path& path);

 private:
  std::map<std::string, Record> records_;
};

}  // namespace posesynth
