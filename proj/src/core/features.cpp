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
#include "core/features.hpp"

#include <array>
#include <cmath>

#include "core/nn/layers.hpp"
#include "core/random.hpp"

namespace posesynth {

namespace {

constexpr std::array<int, kFeatureLayers> kVggWidths = {64,  64,  128, 128, 256, 256, 256, 256,
                                                        512, 512, 512, 512, 512, 512, 512, 512};
constexpr std::array<int, kFeatureLayers> kVggBlock = {1, 1, 2, 2, 3, 3, 3, 3, 4, 4, 4, 4, 5, 5, 5, 5};

// ImageNet channel statistics on [0, 1] RGB.
constexpr std::array<double, 3> kPixelMean = {0.485, 0.456, 0.406};
constexpr std::array<double, 3> kPixelStd = {0.229, 0.224, 0.225};

bool pool_after(int i) { return i + 1 < kFeatureLayers && kVggBlock[i] != kVggBlock[i + 1]; }

}  // namespace

std::string_view feature_profile_name(FeatureProfile p) {
  return p == FeatureProfile::Vgg19 ? "vgg19" : "random-fixed";
}

FeatureProfile parse_feature_profile(std::string_view s) {
  if (s == "vgg19") return FeatureProfile::Vgg19;
  if (s == "random-fixed") return FeatureProfile::RandomFixed;
  throw InvalidInput("unknown feature profile '" + std::string(s) + "' (expected vgg19 or random-fixed)");
}

std::string vgg19_layer_name(int i) {
  if (i < 0 || i >= kFeatureLayers) throw InvalidInput("vgg19 layer index out of range");
  int within = 1;
  for (int k = i - 1; k >= 0 && kVggBlock[k] == kVggBlock[i]; --k) ++within;
  return "conv" + std::to_string(kVggBlock[i]) + "_" + std::to_string(within);
}

template <typename T>
FeatureExtractor<T> FeatureExtractor<T>::random_fixed(std::uint64_t seed, int width_divisor) {
  if (width_divisor < 1) throw InvalidInput("feature width divisor must be >= 1");
  FeatureExtractor f;
  f.profile_ = FeatureProfile::RandomFixed;
  f.seed_ = seed;
  f.divisor_ = width_divisor;
  std::mt19937_64 rng(seed);
  int in_c = 3;
  for (int i = 0; i < kFeatureLayers; ++i) {
    const int out_c = std::max(1, kVggWidths[i] / width_divisor);
    const double sd = std::sqrt(2.0 / (in_c * 9.0));
    std::vector<T> w(static_cast<std::size_t>(out_c) * in_c * 9);
    for (auto& v : w) v = static_cast<T>(standard_normal(rng) * sd);
    f.widths_.push_back(out_c);
    f.weights_.push_back(std::move(w));
    f.biases_.emplace_back(out_c, T(0));
    in_c = out_c;
  }
  return f;
}

template <typename T>
FeatureExtractor<T> FeatureExtractor<T>::load_vgg19(const std::filesystem::path& path) {
  const Container c = Container::load(path);
  if (c.kind != "posesynth.vgg19")
    throw DecodeError(path.string() + ": container kind '" + c.kind + "' is not posesynth.vgg19");
  FeatureExtractor f;
  f.profile_ = FeatureProfile::Vgg19;
  int in_c = 3;
  for (int i = 0; i < kFeatureLayers; ++i) {
    const std::string name = vgg19_layer_name(i);
    const int out_c = kVggWidths[i];
    for (const char* part : {".weight", ".bias"}) {
      if (!c.has(name + part)) throw DecodeError(path.string() + ": missing record " + name + part);
    }
    const auto& wr = c.at(name + ".weight");
    const std::vector<std::int64_t> want{out_c, in_c, 3, 3};
    if (wr.dims != want) throw DecodeError(path.string() + ": " + name + ".weight must be [" +
                                           std::to_string(out_c) + "," + std::to_string(in_c) + ",3,3]");
    f.widths_.push_back(out_c);
    f.weights_.push_back(c.get<T>(name + ".weight", want[0] * want[1] * 9));
    f.biases_.push_back(c.get<T>(name + ".bias", out_c));
    in_c = out_c;
  }
  return f;
}

template <typename T>
std::vector<Tensor<T>> FeatureExtractor<T>::features(const Tensor<T>& image, Trace* trace) const {
  if (weights_.empty()) throw InvalidState("feature extractor has no weights");
  if (image.c() != 3) throw InvalidInput("feature extractor expects 3-channel images");
  if (image.h() % 16 != 0 || image.w() % 16 != 0 || image.h() == 0)
    throw InvalidInput("feature extractor input " + image.shape().str() + " is not divisible by 16");

  Tensor<T> x(image.shape());
  const std::size_t hw = image.shape().plane();
  for (int n = 0; n < image.n(); ++n)
    for (int c = 0; c < 3; ++c) {
      const T* s = image.plane(n, c);
      T* d = x.plane(n, c);
      const T lo = static_cast<T>(kPixelMean[c]), inv = static_cast<T>(1.0 / kPixelStd[c]);
      for (std::size_t i = 0; i < hw; ++i) d[i] = ((s[i] + T(1)) * T(0.5) - lo) * inv;
    }

  std::vector<Tensor<T>> feats;
  if (trace != nullptr) *trace = Trace{};
  for (int i = 0; i < kFeatureLayers; ++i) {
    const auto g = nn::ConvGeometry::make(x.c(), x.h(), x.w(), widths_[i], 3, 1);
    Tensor<T> y;
    nn::conv2d_forward(g, x, weights_[i].data(), biases_[i].data(), y);
    nn::activate(nn::Activation::Relu, 0.0, y);
    if (trace != nullptr) trace->conv_inputs.push_back(std::move(x));
    if (pool_after(i)) {
      std::vector<std::uint32_t> argmax;
      x = nn::maxpool2x(y, argmax);
      if (trace != nullptr) trace->pool_argmax.push_back(std::move(argmax));
    } else {
      x = y;
    }
    feats.push_back(std::move(y));
  }
  if (trace != nullptr) trace->features = feats;
  return feats;
}

template <typename T>
Tensor<T> FeatureExtractor<T>::backward(const Trace& trace, std::vector<Tensor<T>> grads) const {
  if (grads.size() != static_cast<std::size_t>(kFeatureLayers) || trace.features.size() != grads.size())
    throw InvalidInput("feature backward expects one gradient per layer");
  Tensor<T> g;
  int pool = static_cast<int>(trace.pool_argmax.size());
  for (int i = kFeatureLayers - 1; i >= 0; --i) {
    if (pool_after(i)) {
      --pool;
      if (!g.empty()) g = nn::maxpool2x_backward(g, trace.pool_argmax[pool], trace.features[i].shape());
    }
    if (!grads[i].empty()) {
      require_same_shape(grads[i], trace.features[i], "feature gradient");
      if (g.empty()) {
        g = std::move(grads[i]);
      } else {
        for (std::size_t k = 0; k < g.size(); ++k) g.data()[k] += grads[i].data()[k];
      }
    }
    if (g.empty()) continue;
    nn::activation_backward(nn::Activation::Relu, 0.0, trace.features[i], g);
    const Tensor<T>& in = trace.conv_inputs[i];
    const auto geo = nn::ConvGeometry::make(in.c(), in.h(), in.w(), widths_[i], 3, 1);
    Tensor<T> gi;
    nn::conv2d_backward<T>(geo, in, weights_[i].data(), g, &gi, nullptr, nullptr);
    g = std::move(gi);
  }
  const Shape s = trace.conv_inputs.front().shape();
  if (g.empty()) return Tensor<T>(s);
  const std::size_t hw = s.plane();
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < 3; ++c) {
      T* d = g.plane(n, c);
      const T k = static_cast<T>(0.5 / kPixelStd[c]);
      for (std::size_t i = 0; i < hw; ++i) d[i] *= k;
    }
  return g;
}

template <typename T>
void FeatureExtractor<T>::fit_stats(std::span<const Tensor<T>> images) {
  if (images.empty()) throw InvalidInput("fit_feature_stats: empty sample");
  std::vector<std::vector<double>> sum(kFeatureLayers), sq(kFeatureLayers);
  std::vector<double> count(kFeatureLayers, 0.0);
  for (int i = 0; i < kFeatureLayers; ++i) {
    sum[i].assign(widths_[i], 0.0);
    sq[i].assign(widths_[i], 0.0);
  }
  for (const auto& img : images) {
    const auto feats = features(img);
    for (int i = 0; i < kFeatureLayers; ++i) {
      const auto& f = feats[i];
      const std::size_t hw = f.shape().plane();
      for (int n = 0; n < f.n(); ++n)
        for (int c = 0; c < f.c(); ++c) {
          const T* p = f.plane(n, c);
          double s = 0.0, q = 0.0;
          for (std::size_t k = 0; k < hw; ++k) {
            s += p[k];
            q += static_cast<double>(p[k]) * p[k];
          }
          sum[i][c] += s;
          sq[i][c] += q;
        }
      count[i] += static_cast<double>(f.n()) * hw;
    }
  }
  Stats st;
  for (int i = 0; i < kFeatureLayers; ++i) {
    std::vector<double> m(widths_[i]), sd(widths_[i]);
    for (int c = 0; c < widths_[i]; ++c) {
      m[c] = sum[i][c] / count[i];
      const double var = std::max(0.0, sq[i][c] / count[i] - m[c] * m[c]);
      sd[c] = std::max(kFeatureStdFloor, std::sqrt(var));
    }
    st.mean.push_back(std::move(m));
    st.std.push_back(std::move(sd));
  }
  stats_ = std::move(st);
}

template <typename T>
void FeatureExtractor<T>::set_stats(Stats s) {
  if (s.mean.size() != static_cast<std::size_t>(kFeatureLayers) || s.std.size() != s.mean.size())
    throw InvalidInput("feature statistics need 16 layers");
  for (int i = 0; i < kFeatureLayers; ++i) {
    if (s.mean[i].size() != static_cast<std::size_t>(widths_[i]) || s.std[i].size() != s.mean[i].size())
      throw InvalidInput("feature statistics width mismatch at layer " + std::to_string(i + 1));
    for (double& v : s.std[i]) v = std::max(v, kFeatureStdFloor);
  }
  stats_ = std::move(s);
}

template <typename T>
double FeatureExtractor<T>::loss(const Tensor<T>& y, const Tensor<T>& target, Tensor<T>* grad_y) const {
  if (!fitted()) throw InvalidState("VGG loss: feature statistics have not been fitted");
  require_same_shape(y, target, "VGG loss");
  Trace trace;
  const auto fy = features(y, grad_y != nullptr ? &trace : nullptr);
  const auto ft = features(target);
  double total = 0.0;
  for (const auto& f : fy) total += static_cast<double>(f.size());

  double acc = 0.0;
  std::vector<Tensor<T>> grads;
  for (int i = 0; i < kFeatureLayers; ++i) {
    const std::size_t hw = fy[i].shape().plane();
    Tensor<T> g;
    if (grad_y != nullptr) g = Tensor<T>(fy[i].shape());
    for (int n = 0; n < fy[i].n(); ++n)
      for (int c = 0; c < fy[i].c(); ++c) {
        const double inv = 1.0 / stats_.std[i][c];
        const T* a = fy[i].plane(n, c);
        const T* b = ft[i].plane(n, c);
        double s = 0.0;
        for (std::size_t k = 0; k < hw; ++k) s += std::abs(static_cast<double>(a[k]) - b[k]);
        acc += s * inv;
        if (grad_y != nullptr) {
          T* d = g.plane(n, c);
          const T step = static_cast<T>(inv / total);
          for (std::size_t k = 0; k < hw; ++k) d[k] = a[k] > b[k] ? step : (a[k] < b[k] ? -step : T(0));
        }
      }
    grads.push_back(std::move(g));
  }
  if (grad_y != nullptr) *grad_y = backward(trace, std::move(grads));
  return acc / total;
}

template <typename T>
void FeatureExtractor<T>::store(Container& c, const std::string& prefix) const {
  c.metadata[prefix] = {{"profile", feature_profile_name(profile_)},
                        {"seed", seed_},
                        {"width_divisor", divisor_},
                        {"layers", "first 16 convolutions, post-ReLU"}};
  for (int i = 0; i < static_cast<int>(stats_.mean.size()); ++i) {
    const std::vector<std::int64_t> dims{static_cast<std::int64_t>(stats_.mean[i].size())};
    c.put(prefix + ".stats." + vgg19_layer_name(i) + ".mean", dims, std::span<const double>(stats_.mean[i]));
    c.put(prefix + ".stats." + vgg19_layer_name(i) + ".std", dims, std::span<const double>(stats_.std[i]));
  }
}

template <typename T>
FeatureExtractor<T> FeatureExtractor<T>::restore(const Container& c, const std::string& prefix,
                                                 const std::filesystem::path& vgg19_weights) {
  if (!c.metadata.contains(prefix)) throw DecodeError("checkpoint has no '" + prefix + "' feature section");
  const auto& m = c.metadata.at(prefix);
  const FeatureProfile p = parse_feature_profile(m.at("profile").get<std::string>());
  FeatureExtractor f;
  if (p == FeatureProfile::RandomFixed) {
    f = random_fixed(m.at("seed").get<std::uint64_t>(), m.at("width_divisor").get<int>());
  } else {
    if (vgg19_weights.empty()) throw InvalidInput("checkpoint uses the vgg19 feature profile; supply the weight file");
    f = load_vgg19(vgg19_weights);
  }
  const std::string first = prefix + ".stats." + vgg19_layer_name(0) + ".mean";
  if (c.has(first)) {
    Stats s;
    for (int i = 0; i < kFeatureLayers; ++i) {
      const std::string base = prefix + ".stats." + vgg19_layer_name(i);
      s.mean.push_back(c.get<double>(base + ".mean", f.widths_[i]));
      s.std.push_back(c.get<double>(base + ".std", f.widths_[i]));
    }
    f.set_stats(std::move(s));
  }
  return f;
}

template class FeatureExtractor<float>;
template class FeatureExtractor<double>;

}  // namespace posesynth
