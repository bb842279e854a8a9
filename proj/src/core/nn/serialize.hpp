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

#include <filesystem>
#include <string>

#include "core/checkpoint.hpp"
#include "core/nn/network.hpp"

namespace posesynth::nn {

/// Hash of the architecture text and the build resolution.
std::string network_fingerprint(const NetSpec& spec, int height, int width);

template <typename T>
void store_network(Container& c, const std::string& prefix, const Network<T>& net);

/// Copies parameter values; throws FingerprintMismatch if the stored shapes or
/// names do not match `net`.
template <typename T>
void restore_network(const Container& c, const std::string& prefix, Network<T>& net);

template <typename T>
void save_network(const std::filesystem::path& path, const Network<T>& net);

/// Refuses to load when the file's fingerprint differs from `net`'s.
template <typename T>
void load_network(const std::filesystem::path& path, Network<T>& net);

}  // namespace posesynth::nn
