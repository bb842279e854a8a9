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
#include "core/generator.hpp"

#include <cmath>

#include "core/nn/layers.hpp"
#include "core/random.hpp"

namespace posesynth {

void GeneratorConfig::validate() const {
  if (resolution <= 0 || resolution % 32 != 0)
    throw InvalidInput("resolution " + std::to_string(resolution) + " is not a positive multiple of 32");
  if (!std::isfinite(sigma_heat)) throw InvalidInput("sigma_heat must be finite");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw InvalidInput("noise_sigma must be >= 0");
}

nlohmann::json GeneratorConfig::to_json() const {
  return {{"resolution", resolution}, {"sigma_heat", sigma_heat}, {"noise_sigma", noise_sigma}, {"desk", desk}};
}

GeneratorConfig GeneratorConfig::from_json(const nlohmann::json& j) {
  GeneratorConfig c;
  c.resolution = j.value("resolution", c.resolution);
  c.sigma_heat = j.value("sigma_heat", c.sigma_heat);
  c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
  c.desk = j.value("desk", c.desk);
  c.validate();
  return c;
}

template <typename T>
GeneratorNets<T> GeneratorNets<T>::build(const GeneratorConfig& cfg, std::uint64_t seed, nn::InitScheme init) {
  cfg.validate();
  const int r = cfg.resolution, d = cfg.width_divisor();
  return {nn::Network<T>(nn::segmentation_net_spec(d), r, r, derive_seed(seed, 0), init),
          nn::Network<T>(nn::foreground_net_spec(d), r, r, derive_seed(seed, 1), init),
          nn::Network<T>(nn::background_net_spec(d), r, r, derive_seed(seed, 2), init)};
}

template <typename T>
Tensor<T> segment_source(const Tensor<T>& source, const Tensor<T>& source_heatmaps, const Tensor<T>& prior,
                         const nn::Network<T>& seg_net, Tensor<T>* residual, typename nn::Network<T>::Trace* trace) {
  if (prior.c() != kNumLayers) throw InvalidInput("segment_source: prior must have 11 channels");
  const Tensor<T> input = concat_channels({&source, &source_heatmaps});
  Tensor<T> delta = std::move(seg_net.forward(input, trace).front());
  require_same_shape(delta, prior, "segment_source");
  Tensor<T> masks(delta.shape());
  for (std::size_t i = 0; i < masks.size(); ++i) masks.data()[i] = delta.data()[i] + std::log(prior.data()[i]);
  nn::activate(nn::Activation::Softmax, 0.0, masks);
  if (residual != nullptr) *residual = std::move(delta);
  return masks;
}

template <typename T>
Tensor<T> mask_layers(const Tensor<T>& source, const Tensor<T>& masks) {
  if (source.c() != 3 || source.n() != masks.n() || source.h() != masks.h() || source.w() != masks.w())
    throw InvalidInput("mask_layers: shape mismatch " + source.shape().str() + " vs " + masks.shape().str());
  Tensor<T> out(masks.n(), 3 * masks.c(), masks.h(), masks.w());
  const std::size_t hw = masks.shape().plane();
  for (int n = 0; n < masks.n(); ++n)
    for (int l = 0; l < masks.c(); ++l) {
      const T* m = masks.plane(n, l);
      for (int c = 0; c < 3; ++c) {
        const T* s = source.plane(n, c);
        T* o = out.plane(n, 3 * l + c);
        for (std::size_t i = 0; i < hw; ++i) o[i] = m[i] * s[i];
      }
    }
  return out;
}

template <typename T>
Tensor<T> warp_layers(const Tensor<T>& layers, const std::vector<std::vector<SimilarityTransform>>& transforms) {
  if (static_cast<int>(transforms.size()) != layers.n()) throw InvalidInput("warp_layers: one transform set per sample");
  Tensor<T> out(layers.n(), 3 * kNumParts, layers.h(), layers.w());
  for (int n = 0; n < layers.n(); ++n) {
    if (transforms[n].size() != static_cast<std::size_t>(kNumParts))
      throw InvalidInput("warp_layers: expected 10 transforms");
    const Tensor<T> sample = take_sample(layers, n);
    for (int l = 0; l < kNumParts; ++l) {
      const Tensor<T> w = warp_bilinear(slice_channels(sample, 3 * l, 3), transforms[n][l]);
      std::copy(w.data(), w.data() + w.size(), out.plane(n, 3 * l));
    }
  }
  return out;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> synthesize_foreground(const Tensor<T>& warped, const Tensor<T>& target_heatmaps,
                                                      const nn::Network<T>& fg_net,
                                                      typename nn::Network<T>::Trace* trace) {
  auto heads = fg_net.forward(concat_channels({&warped, &target_heatmaps}), trace);
  return {std::move(heads[0]), std::move(heads[1])};
}

template <typename T>
Tensor<T> synthesize_background(const Tensor<T>& source, const Tensor<T>& masks, const Tensor<T>& source_heatmaps,
                                double sigma, const nn::Network<T>& bg_net, std::mt19937_64& rng, Tensor<T>* noise_out,
                                Tensor<T>* filled_out, typename nn::Network<T>::Trace* trace) {
  if (sigma < 0.0) throw InvalidInput("synthesize_background: sigma must be >= 0");
  const Tensor<T> bg_mask = slice_channels(masks, kBackgroundLayer, 1);
  Tensor<T> noise(source.shape());
  for (auto& v : noise.vec()) v = static_cast<T>(standard_normal(rng) * sigma);
  Tensor<T> filled(source.shape());
  const std::size_t hw = source.shape().plane();
  for (int n = 0; n < source.n(); ++n) {
    const T* m = bg_mask.sample(n);
    for (int c = 0; c < 3; ++c) {
      const T* s = source.plane(n, c);
      const T* z = noise.plane(n, c);
      T* f = filled.plane(n, c);
      for (std::size_t i = 0; i < hw; ++i) f[i] = s[i] * m[i] + z[i] * (T(1) - m[i]);
    }
  }
  Tensor<T> out = std::move(bg_net.forward(concat_channels({&filled, &bg_mask, &source_heatmaps}), trace).front());
  if (noise_out != nullptr) *noise_out = std::move(noise);
  if (filled_out != nullptr) *filled_out = std::move(filled);
  return out;
}

template <typename T>
Tensor<T> composite(const Tensor<T>& foreground, const Tensor<T>& background, const Tensor<T>& mask) {
  require_same_shape(foreground, background, "composite");
  if (mask.c() != 1 || mask.n() != foreground.n() || mask.h() != foreground.h() || mask.w() != foreground.w())
    throw InvalidInput("composite: mask shape " + mask.shape().str());
  Tensor<T> out(foreground.shape());
  const std::size_t hw = foreground.shape().plane();
  for (int n = 0; n < foreground.n(); ++n) {
    const T* m = mask.sample(n);
    for (int c = 0; c < foreground.c(); ++c) {
      const T* f = foreground.plane(n, c);
      const T* b = background.plane(n, c);
      T* o = out.plane(n, c);
      for (std::size_t i = 0; i < hw; ++i) o[i] = m[i] * f[i] + (T(1) - m[i]) * b[i];
    }
  }
  return out;
}

template <typename T>
GeneratorOutput<T> generator_forward(const GeneratorNets<T>& nets, const GeneratorConfig& cfg,
                                     std::span<const GeneratorInput<T>> batch, std::mt19937_64& rng,
                                     GeneratorTrace<T>* trace) {
  cfg.validate();
  if (batch.empty()) throw InvalidInput("generator_forward: empty batch");
  const int r = cfg.resolution;
  const double sigma = cfg.heat_sigma();
  std::vector<Tensor<T>> src, hs, ht, prior;
  GeneratorOutput<T> out;
  for (const auto& item : batch) {
    const Shape& s = item.source_image.shape();
    if (s.n != 1 || s.c != 3 || s.h != r || s.w != r)
      throw InvalidInput("generator input image " + s.str() + " does not match resolution " + std::to_string(r));
    src.push_back(item.source_image);
    hs.push_back(render_heatmaps<T>(item.source_pose, r, r, sigma));
    ht.push_back(render_heatmaps<T>(item.target_pose, r, r, sigma));
    prior.push_back(prior_masks<T>(item.source_pose, part_scheme(), r, r));
    out.transforms.push_back(compute_part_transforms(item.source_pose, item.target_pose, part_scheme()));
  }
  const Tensor<T> source = stack_samples<T>(src);
  const Tensor<T> hs_b = stack_samples<T>(hs);
  const Tensor<T> ht_b = stack_samples<T>(ht);
  const Tensor<T> prior_b = stack_samples<T>(prior);

  out.masks = segment_source(source, hs_b, prior_b, nets.seg, &out.mask_residual, trace ? &trace->seg : nullptr);
  out.layers = mask_layers(source, out.masks);
  out.warped = warp_layers(out.layers, out.transforms);
  std::tie(out.foreground, out.target_mask) =
      synthesize_foreground(out.warped, ht_b, nets.fg, trace ? &trace->fg : nullptr);
  Tensor<T> noise;
  out.background = synthesize_background(source, out.masks, hs_b, cfg.noise_sigma, nets.bg, rng, &noise,
                                         &out.background_input, trace ? &trace->bg : nullptr);
  out.image = composite(out.foreground, out.background, out.target_mask);
  if (trace != nullptr) {
    trace->source = source;
    trace->noise = std::move(noise);
    trace->out = out;
  }
  return out;
}

template <typename T>
void generator_backward(GeneratorNets<T>& nets, const GeneratorTrace<T>& trace, const Tensor<T>& grad_image) {
  const auto& o = trace.out;
  require_same_shape(grad_image, o.image, "generator_backward");
  const int N = grad_image.n();
  const std::size_t hw = grad_image.shape().plane();

  // Compositing.
  Tensor<T> d_fg(o.foreground.shape()), d_bg(o.background.shape()), d_mt(o.target_mask.shape());
  for (int n = 0; n < N; ++n) {
    const T* m = o.target_mask.sample(n);
    T* dm = d_mt.sample(n);
    for (int c = 0; c < 3; ++c) {
      const T* g = grad_image.plane(n, c);
      const T* f = o.foreground.plane(n, c);
      const T* b = o.background.plane(n, c);
      T* df = d_fg.plane(n, c);
      T* db = d_bg.plane(n, c);
      for (std::size_t i = 0; i < hw; ++i) {
        df[i] = m[i] * g[i];
        db[i] = (T(1) - m[i]) * g[i];
        dm[i] += (f[i] - b[i]) * g[i];
      }
    }
  }

  // Foreground net, then through the warps into the part masks.
  const std::vector<Tensor<T>> fg_heads{std::move(d_fg), std::move(d_mt)};
  const Tensor<T> d_fg_in = nets.fg.backward(trace.fg, fg_heads, true);
  Tensor<T> d_masks(o.masks.shape());
  for (int n = 0; n < N; ++n) {
    const Shape block{1, 3, o.masks.h(), o.masks.w()};
    for (int l = 0; l < kNumParts; ++l) {
      Tensor<T> up(block);
      std::copy_n(d_fg_in.plane(n, 3 * l), block.size(), up.data());
      const Tensor<T> d_layer = warp_bilinear_grad(up, o.transforms[n][l], block);
      T* dm = d_masks.plane(n, l);
      for (int c = 0; c < 3; ++c) {
        const T* dl = d_layer.plane(0, c);
        const T* s = trace.source.plane(n, c);
        for (std::size_t i = 0; i < hw; ++i) dm[i] += dl[i] * s[i];
      }
    }
  }

  // Background net: the filled image and the mask channel both depend on the
  // background mask.
  const std::vector<Tensor<T>> bg_heads{std::move(d_bg)};
  const Tensor<T> d_bg_in = nets.bg.backward(trace.bg, bg_heads, true);
  for (int n = 0; n < N; ++n) {
    T* dm = d_masks.plane(n, kBackgroundLayer);
    const T* direct = d_bg_in.plane(n, 3);
    for (std::size_t i = 0; i < hw; ++i) dm[i] += direct[i];
    for (int c = 0; c < 3; ++c) {
      const T* df = d_bg_in.plane(n, c);
      const T* s = trace.source.plane(n, c);
      const T* z = trace.noise.plane(n, c);
      for (std::size_t i = 0; i < hw; ++i) dm[i] += df[i] * (s[i] - z[i]);
    }
  }

  // Softmax over layers; the log prior is constant.
  nn::activation_backward(nn::Activation::Softmax, 0.0, o.masks, d_masks);
  const std::vector<Tensor<T>> seg_heads{std::move(d_masks)};
  nets.seg.backward(trace.seg, seg_heads, false);
}

#define POSESYNTH_INSTANTIATE_GENERATOR(T)                                                                          \
  template struct GeneratorNets<T>;                                                                                 \
  template Tensor<T> segment_source<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const nn::Network<T>&, \
                                       Tensor<T>*, typename nn::Network<T>::Trace*);                                \
  template Tensor<T> mask_layers<T>(const Tensor<T>&, const Tensor<T>&);                                            \
  template Tensor<T> warp_layers<T>(const Tensor<T>&, const std::vector<std::vector<SimilarityTransform>>&);        \
  template std::pair<Tensor<T>, Tensor<T>> synthesize_foreground<T>(const Tensor<T>&, const Tensor<T>&,             \
                                                                    const nn::Network<T>&,                          \
                                                                    typename nn::Network<T>::Trace*);               \
  template Tensor<T> synthesize_background<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, double,         \
                                              const nn::Network<T>&, std::mt19937_64&, Tensor<T>*, Tensor<T>*,      \
                                              typename nn::Network<T>::Trace*);                                     \
  template Tensor<T> composite<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                            \
  template GeneratorOutput<T> generator_forward<T>(const GeneratorNets<T>&, const GeneratorConfig&,                 \
                                                   std::span<const GeneratorInput<T>>, std::mt19937_64&,            \
                                                   GeneratorTrace<T>*);                                             \
  template void generator_backward<T>(GeneratorNets<T>&, const GeneratorTrace<T>&, const Tensor<T>&);

POSESYNTH_INSTANTIATE_GENERATOR(float)
POSESYNTH_INSTANTIATE_GENERATOR(double)

#undef POSESYNTH_INSTANTIATE_GENERATOR

}  // namespace posesynth
