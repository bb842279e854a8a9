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
#include "core/nn/serialize.hpp"

namespace posesynth::nn {

std::string network_fingerprint(const NetSpec& spec, int height, int width) {
  const std::string text = describe(spec) + "size " + std::to_string(height) + "x" + std::to_string(width) + "\n";
  return hex64(fnv1a64(text));
}

template <typename T>
void store_network(Container& c, const std::string& prefix, const Network<T>& net) {
  for (const auto& p : net.parameters()) {
    std::vector<std::int64_t> dims(p.dims.begin(), p.dims.end());
    c.put(prefix + p.name, std::move(dims), std::span<const T>(p.value));
  }
}

template <typename T>
void restore_network(const Container& c, const std::string& prefix, Network<T>& net) {
  for (auto& p : net.parameters()) {
    const std::string name = prefix + p.name;
    if (!c.has(name)) throw FingerprintMismatch("checkpoint lacks parameter '" + name + "'");
    const auto& rec = c.at(name);
    if (rec.dims.size() != p.dims.size() || !std::equal(rec.dims.begin(), rec.dims.end(), p.dims.begin()))
      throw FingerprintMismatch("checkpoint parameter '" + name + "' has a different shape");
    const auto v = c.get<T>(name, p.value.size());
    p.value.assign(v.begin(), v.end());
  }
}

template <typename T>
void save_network(const std::filesystem::path& path, const Network<T>& net) {
  Container c;
  c.kind = "posesynth.network";
  c.fingerprint = network_fingerprint(net.spec(), net.nominal_height(), net.nominal_width());
  c.metadata = {{"spec", describe(net.spec())},
                {"height", net.nominal_height()},
                {"width", net.nominal_width()}};
  store_network(c, "", net);
  c.save(path);
}

template <typename T>
void load_network(const std::filesystem::path& path, Network<T>& net) {
  const Container c = Container::load(path);
  const std::string expected = network_fingerprint(net.spec(), net.nominal_height(), net.nominal_width());
  if (c.kind != "posesynth.network" || c.fingerprint != expected)
    throw FingerprintMismatch(path.string() + ": fingerprint " + c.fingerprint + " does not match network " +
                              expected);
  restore_network(c, "", net);
}

#define POSESYNTH_INSTANTIATE_IO(T)                                                             \
  template void store_network<T>(Container&, const std::string&, const Network<T>&);            \
  template void restore_network<T>(const Container&, const std::string&, Network<T>&);          \
  template void save_network<T>(const std::filesystem::path&, const Network<T>&);                \
  template void load_network<T>(const std::filesystem::path&, Network<T>&);

POSESYNTH_INSTANTIATE_IO(float)
POSESYNTH_INSTANTIATE_IO(double)

#undef POSESYNTH_INSTANTIATE_IO

}  // namespace posesynth::nn
