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
#include <optional>
#include <string>

#include <json.hpp>

#include "core/features.hpp"
#include "core/generator.hpp"
#include "core/losses.hpp"

namespace posesynth {

/// A trained generator plus everything needed to evaluate or continue it.
struct Model {
  GeneratorConfig config;
  GeneratorNets<float> nets;
  std::optional<nn::Network<float>> discriminator;
  std::optional<FeatureExtractor<float>> features;
  LossMode mode = LossMode::L1;
  std::int64_t steps = 0;
  std::uint64_t seed = 0;
  nlohmann::json history = nlohmann::json::object();

  static Model create(const GeneratorConfig& config, std::uint64_t seed,
                      nn::InitScheme init = nn::InitScheme::TruncatedNormal);
};

/// Hash of the three generator architectures and the build resolution.
std::string generator_fingerprint(const GeneratorConfig& config);

void save_model(const std::filesystem::path& path, const Model& model);

/// Throws FingerprintMismatch when the stored architecture does not match the
/// stored configuration. `vgg19_weights` is needed only for the vgg19 profile.
Model load_model(const std::filesystem::path& path, const std::filesystem::path& vgg19_weights = {});

}  // namespace posesynth
