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
#include "core/nn/spec.hpp"

#include <sstream>

#include "core/pose.hpp"

namespace posesynth::nn {

namespace {

using A = Activation;

int scaled(int width, int divisor) {
  if (divisor <= 0) throw InvalidInput("width divisor must be positive");
  return std::max(1, width / divisor);
}

// Encoder layers 1,3,5,7,9 feed the decoder just after each upsample, deepest first.
std::vector<SkipSpec> unet_skips() { return {{8, 1}, {6, 3}, {4, 5}, {2, 7}, {0, 9}}; }

NetSpec unet(std::string name, int in_c, const std::vector<int>& enc_widths, const std::vector<int>& dec_widths,
             std::vector<LayerSpec> heads, int d) {
  NetSpec s;
  s.name = std::move(name);
  s.topology = Topology::UNet;
  s.input_channels = in_c;
  for (std::size_t i = 0; i < enc_widths.size(); ++i) {
    const int kernel = i == 0 ? 7 : 3;
    const int stride = i % 2 == 1 ? 2 : 1;
    s.encoder.push_back(LayerSpec::conv(scaled(enc_widths[i], d), kernel, stride));
  }
  // Decoder: conv, U, conv, U, ... , conv (the last conv has no upsample after it).
  for (std::size_t i = 0; i < dec_widths.size(); ++i) {
    s.decoder.push_back(LayerSpec::conv(scaled(dec_widths[i], d)));
    if (i + 1 < dec_widths.size()) s.decoder.push_back(LayerSpec::upsample());
  }
  s.skips = unet_skips();
  s.heads = std::move(heads);
  return s;
}

std::string layer_text(const LayerSpec& l) {
  std::ostringstream os;
  switch (l.kind) {
    case LayerKind::Conv:
      os << 'C' << l.filters << (l.stride == 2 ? "_2" : "") << " k" << l.kernel << ' '
         << activation_name(l.activation);
      break;
    case LayerKind::Upsample: os << 'U'; break;
    case LayerKind::Flatten: os << 'F'; break;
    case LayerKind::Dense: os << 'D' << l.filters << ' ' << activation_name(l.activation); break;
  }
  return os.str();
}

struct Trace {
  int c, h, w;
};

Trace step(const LayerSpec& l, Trace t) {
  switch (l.kind) {
    case LayerKind::Conv: return {l.filters, (t.h + l.stride - 1) / l.stride, (t.w + l.stride - 1) / l.stride};
    case LayerKind::Upsample: return {t.c, t.h * 2, t.w * 2};
    case LayerKind::Flatten: return {t.c * t.h * t.w, 1, 1};
    case LayerKind::Dense: return {l.filters, 1, 1};
  }
  return t;
}

std::size_t layer_params(const LayerSpec& l, const Trace& in) {
  switch (l.kind) {
    case LayerKind::Conv:
      return static_cast<std::size_t>(l.filters) * in.c * l.kernel * l.kernel + l.filters;
    case LayerKind::Dense: return static_cast<std::size_t>(l.filters) * in.c * in.h * in.w + l.filters;
    default: return 0;
  }
}

// Walks the spec calling visit(layer, input trace) and returns head traces.
template <typename Visit>
std::vector<Trace> walk(const NetSpec& s, int h, int w, Visit&& visit) {
  Trace t{s.input_channels, h, w};
  std::vector<Trace> enc_out;
  for (const auto& l : s.encoder) {
    visit(l, t);
    t = step(l, t);
    enc_out.push_back(t);
  }
  if (s.topology == Topology::Sequential) return {t};
  for (std::size_t j = 0; j < s.decoder.size(); ++j) {
    visit(s.decoder[j], t);
    t = step(s.decoder[j], t);
    for (const auto& sk : s.skips)
      if (sk.decoder == static_cast<int>(j)) {
        const Trace& e = enc_out[sk.encoder];
        if (e.h != t.h || e.w != t.w)
          throw InvalidInput(s.name + ": skip e" + std::to_string(sk.encoder + 1) + " -> d" +
                             std::to_string(sk.decoder + 1) + " joins unequal resolutions");
        t.c += e.c;
      }
  }
  std::vector<Trace> heads;
  for (const auto& hd : s.heads) {
    visit(hd, t);
    heads.push_back(step(hd, t));
  }
  return heads;
}

}  // namespace

void NetSpec::validate() const {
  auto check = [&](const LayerSpec& l) {
    if (l.kind == LayerKind::Conv) {
      if (l.kernel != 3 && l.kernel != 7) throw InvalidInput(name + ": conv kernel must be 3 or 7");
      if (l.stride != 1 && l.stride != 2) throw InvalidInput(name + ": conv stride must be 1 or 2");
      if (l.filters <= 0) throw InvalidInput(name + ": conv needs filters");
    }
    if (l.kind == LayerKind::Dense && l.filters <= 0) throw InvalidInput(name + ": dense needs units");
  };
  if (input_channels <= 0) throw InvalidInput(name + ": input_channels must be positive");
  for (const auto& l : encoder) check(l);
  for (const auto& l : decoder) check(l);
  for (const auto& l : heads) check(l);
  if (topology == Topology::UNet) {
    if (heads.empty() || heads.size() > 2) throw InvalidInput(name + ": a UNet needs one or two heads");
    for (const auto& sk : skips) {
      if (sk.encoder < 0 || sk.encoder >= static_cast<int>(encoder.size()) || sk.decoder < 0 ||
          sk.decoder >= static_cast<int>(decoder.size()))
        throw InvalidInput(name + ": skip index out of range");
      if (decoder[sk.decoder].kind != LayerKind::Upsample)
        throw InvalidInput(name + ": skips must land on an upsample output");
    }
    for (const auto& l : heads)
      if (l.kind != LayerKind::Conv) throw InvalidInput(name + ": heads must be convolutions");
  } else if (!decoder.empty() || !heads.empty() || !skips.empty()) {
    throw InvalidInput(name + ": sequential networks keep all layers in the encoder list");
  }
}

NetSpec segmentation_net_spec(int d) {
  return unet("segmentation", 3 + kNumJoints, {64, 64, 128, 128, 128, 128, 128, 128, 128, 128},
              {128, 128, 128, 128, 128, 64}, {LayerSpec::conv(kNumLayers, 3, 1, A::Linear)}, d);
}

NetSpec background_net_spec(int d) {
  // Input is [noise-filled background image, background mask, source pose].
  return unet("background", 4 + kNumJoints, {64, 64, 128, 128, 128, 128, 128, 128, 128, 128},
              {128, 128, 128, 128, 128, 64}, {LayerSpec::conv(3, 3, 1, A::Tanh)}, d);
}

NetSpec foreground_net_spec(int d) {
  return unet("foreground", 3 * kNumParts + kNumJoints, {128, 128, 128, 128, 256, 256, 256, 256, 256, 256},
              {256, 256, 256, 256, 128, 64},
              {LayerSpec::conv(3, 3, 1, A::Tanh), LayerSpec::conv(1, 3, 1, A::Sigmoid)}, d);
}

NetSpec discriminator_spec(int d) {
  NetSpec s;
  s.name = "discriminator";
  s.topology = Topology::Sequential;
  s.input_channels = 3 + kNumJoints;
  for (int wdt : {64, 128, 256, 256, 256}) s.encoder.push_back(LayerSpec::conv(scaled(wdt, d), 3, 2));
  s.encoder.push_back(LayerSpec::conv(scaled(256, d), 3, 1));
  s.encoder.push_back(LayerSpec::flatten());
  s.encoder.push_back(LayerSpec::dense(scaled(256, d)));
  s.encoder.push_back(LayerSpec::dense(scaled(256, d)));
  s.encoder.push_back(LayerSpec::dense(2, A::Softmax));
  return s;
}

int downsample_depth(const NetSpec& spec) {
  int n = 0;
  for (const auto& l : spec.encoder)
    if (l.kind == LayerKind::Conv && l.stride == 2) ++n;
  return n;
}

std::string describe(const NetSpec& s) {
  std::ostringstream os;
  os << "network " << s.name << '\n';
  os << "topology " << (s.topology == Topology::UNet ? "unet" : "sequential") << '\n';
  os << "input_channels " << s.input_channels << '\n';
  os << "leaky_slope " << s.leaky_slope << '\n';
  if (s.topology == Topology::Sequential) {
    os << "layers\n";
    for (std::size_t i = 0; i < s.encoder.size(); ++i) os << "  l" << i + 1 << ' ' << layer_text(s.encoder[i]) << '\n';
    return os.str();
  }
  os << "encoder\n";
  for (std::size_t i = 0; i < s.encoder.size(); ++i) os << "  e" << i + 1 << ' ' << layer_text(s.encoder[i]) << '\n';
  os << "decoder\n";
  for (std::size_t i = 0; i < s.decoder.size(); ++i) os << "  d" << i + 1 << ' ' << layer_text(s.decoder[i]) << '\n';
  os << "skips\n";
  for (const auto& sk : s.skips) os << "  e" << sk.encoder + 1 << " -> d" << sk.decoder + 1 << '\n';
  os << "heads\n";
  for (std::size_t i = 0; i < s.heads.size(); ++i) os << "  h" << i + 1 << ' ' << layer_text(s.heads[i]) << '\n';
  return os.str();
}

std::size_t parameter_count(const NetSpec& spec, int height, int width) {
  spec.validate();
  std::size_t total = 0;
  walk(spec, height, width, [&](const LayerSpec& l, const Trace& in) { total += layer_params(l, in); });
  return total;
}

std::vector<OutputShape> output_shapes(const NetSpec& spec, int height, int width) {
  spec.validate();
  std::vector<OutputShape> out;
  for (const auto& t : walk(spec, height, width, [](const LayerSpec&, const Trace&) {})) out.push_back({t.c, t.h, t.w});
  return out;
}

}  // namespace posesynth::nn
