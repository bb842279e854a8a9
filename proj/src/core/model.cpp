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
#include "core/model.hpp"

#include "core/checkpoint.hpp"
#include "core/nn/serialize.hpp"

namespace posesynth {

namespace {
constexpr const char* kModelKind = "posesynth.model";
}

Model Model::create(const GeneratorConfig& config, std::uint64_t seed, nn::InitScheme init) {
  return Model{config, GeneratorNets<float>::build(config, seed, init), std::nullopt, std::nullopt,
               LossMode::L1, 0, seed, nlohmann::json::object()};
}

std::string generator_fingerprint(const GeneratorConfig& config) {
  const int d = config.width_divisor(), r = config.resolution;
  std::string text;
  for (const auto& spec : {nn::segmentation_net_spec(d), nn::foreground_net_spec(d), nn::background_net_spec(d)})
    text += describe(spec);
  text += "size " + std::to_string(r) + "x" + std::to_string(r) + "\n";
  return hex64(fnv1a64(text));
}

void save_model(const std::filesystem::path& path, const Model& model) {
  Container c;
  c.kind = kModelKind;
  c.fingerprint = generator_fingerprint(model.config);
  c.metadata = {{"generator", model.config.to_json()},
                {"loss_mode", loss_mode_name(model.mode)},
                {"steps", model.steps},
                {"seed", model.seed},
                {"history", model.history},
                {"has_discriminator", model.discriminator.has_value()}};
  nn::store_network(c, "seg.", model.nets.seg);
  nn::store_network(c, "fg.", model.nets.fg);
  nn::store_network(c, "bg.", model.nets.bg);
  if (model.discriminator) {
    c.metadata["discriminator_fingerprint"] =
        nn::network_fingerprint(model.discriminator->spec(), model.config.resolution, model.config.resolution);
    nn::store_network(c, "disc.", *model.discriminator);
  }
  if (model.features) model.features->store(c, "features");
  c.save(path);
}

Model load_model(const std::filesystem::path& path, const std::filesystem::path& vgg19_weights) {
  const Container c = Container::load(path);
  if (c.kind != kModelKind)
    throw DecodeError(path.string() + ": container kind '" + c.kind + "' is not a model checkpoint");
  GeneratorConfig config;
  LossMode mode{};
  std::int64_t steps = 0;
  std::uint64_t seed = 0;
  nlohmann::json history;
  try {
    config = GeneratorConfig::from_json(c.metadata.at("generator"));
    mode = parse_loss_mode(c.metadata.at("loss_mode").get<std::string>());
    steps = c.metadata.at("steps").get<std::int64_t>();
    seed = c.metadata.at("seed").get<std::uint64_t>();
    history = c.metadata.value("history", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError(path.string() + ": malformed model metadata: " + e.what());
  }
  const std::string expected = generator_fingerprint(config);
  if (c.fingerprint != expected)
    throw FingerprintMismatch(path.string() + ": fingerprint " + c.fingerprint + " does not match " + expected);
  Model m = Model::create(config, seed);
  m.mode = mode;
  m.steps = steps;
  m.history = std::move(history);
  nn::restore_network(c, "seg.", m.nets.seg);
  nn::restore_network(c, "fg.", m.nets.fg);
  nn::restore_network(c, "bg.", m.nets.bg);
  if (c.metadata.value("has_discriminator", false)) {
    const int r = m.config.resolution;
    m.discriminator.emplace(nn::discriminator_spec(m.config.width_divisor()), r, r, 0);
    nn::restore_network(c, "disc.", *m.discriminator);
  }
  if (c.metadata.contains("features")) m.features = FeatureExtractor<float>::restore(c, "features", vgg19_weights);
  return m;
}

}  // namespace posesynth
