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
#include "core/nn/network.hpp"

#include <cmath>
#include <random>

#if defined(__SSE2__)
#include <xmmintrin.h>
#endif

#include "core/random.hpp"

namespace posesynth::nn {

namespace {

// Subnormal activations are flushed to zero for the duration of a pass; the
// previous floating-point mode is restored on exit.
class FlushSubnormals {
 public:
#if defined(__SSE2__)
  FlushSubnormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040u); }
  ~FlushSubnormals() { _mm_setcsr(saved_); }

 private:
  unsigned saved_;
#endif
};

template <typename T>
void add_into(Tensor<T>& dst, Tensor<T>&& src) {
  if (dst.empty()) {
    dst = std::move(src);
    return;
  }
  require_same_shape(dst, src, "gradient accumulation");
  T* d = dst.data();
  const T* s = src.data();
  for (std::size_t i = 0; i < dst.size(); ++i) d[i] += s[i];
}

}  // namespace

template <typename T>
Network<T>::Network(NetSpec spec, int height, int width, std::uint64_t seed, InitScheme init)
    : spec_(std::move(spec)), height_(height), width_(width) {
  spec_.validate();
  if (height <= 0 || width <= 0) throw InvalidInput(spec_.name + ": nominal size must be positive");
  const int div = 1 << downsample_depth(spec_);
  if (height % div != 0 || width % div != 0)
    throw InvalidInput(spec_.name + ": input size must be divisible by " + std::to_string(div));
  compile();

  std::mt19937_64 rng(seed);
  for (auto& p : params_) {
    const bool is_bias = p.dims.size() == 1;
    if (is_bias) continue;
    std::size_t fan_in = 1;
    for (std::size_t d = 1; d < p.dims.size(); ++d) fan_in *= static_cast<std::size_t>(p.dims[d]);
    for (auto& v : p.value) {
      double x = 0.0;
      if (init == InitScheme::TruncatedNormal) {
        do x = standard_normal(rng);
        while (std::abs(x) > 2.0);
        x *= 0.02;
      } else {
        x = standard_normal(rng) * std::sqrt(2.0 / static_cast<double>(fan_in));
      }
      v = static_cast<T>(x);
    }
  }
}

template <typename T>
void Network<T>::add_params(const std::string& prefix, const LayerSpec& l, int in_c, int in_features) {
  Parameter<T> w, b;
  w.name = prefix + ".weight";
  b.name = prefix + ".bias";
  if (l.kind == LayerKind::Conv)
    w.dims = {l.filters, in_c, l.kernel, l.kernel};
  else
    w.dims = {l.filters, in_features};
  b.dims = {l.filters};
  std::size_t n = 1;
  for (int d : w.dims) n *= static_cast<std::size_t>(d);
  w.value.assign(n, T(0));
  w.grad.assign(n, T(0));
  b.value.assign(l.filters, T(0));
  b.grad.assign(l.filters, T(0));
  params_.push_back(std::move(w));
  params_.push_back(std::move(b));
}

template <typename T>
void Network<T>::compile() {
  int c = spec_.input_channels, h = height_, w = width_;
  std::vector<int> enc_op;
  std::vector<int> enc_channels;

  auto emit = [&](const LayerSpec& l, const std::string& prefix, std::vector<Op>& into) {
    Op op;
    op.act = l.activation;
    switch (l.kind) {
      case LayerKind::Conv:
        op.kind = OpKind::Conv;
        op.filters = l.filters;
        op.kernel = l.kernel;
        op.stride = l.stride;
        op.param = static_cast<int>(params_.size());
        add_params(prefix, l, c, 0);
        c = l.filters;
        h = (h + l.stride - 1) / l.stride;
        w = (w + l.stride - 1) / l.stride;
        break;
      case LayerKind::Upsample:
        op.kind = OpKind::Upsample;
        h *= 2;
        w *= 2;
        break;
      case LayerKind::Flatten:
        op.kind = OpKind::Flatten;
        c = c * h * w;
        h = w = 1;
        break;
      case LayerKind::Dense:
        op.kind = OpKind::Dense;
        op.filters = l.filters;
        op.param = static_cast<int>(params_.size());
        add_params(prefix, l, 0, c * h * w);
        c = l.filters;
        h = w = 1;
        break;
    }
    into.push_back(op);
  };

  const bool seq = spec_.topology == Topology::Sequential;
  for (std::size_t i = 0; i < spec_.encoder.size(); ++i) {
    emit(spec_.encoder[i], (seq ? "layer" : "enc") + std::to_string(i + 1), ops_);
    enc_op.push_back(static_cast<int>(ops_.size()) - 1);
    enc_channels.push_back(c);
  }
  for (std::size_t j = 0; j < spec_.decoder.size(); ++j) {
    emit(spec_.decoder[j], "dec" + std::to_string(j + 1), ops_);
    for (const auto& sk : spec_.skips) {
      if (sk.decoder != static_cast<int>(j)) continue;
      Op cat;
      cat.kind = OpKind::Concat;
      cat.skip = enc_op[sk.encoder];
      ops_.push_back(cat);
      c += enc_channels[sk.encoder];
    }
  }
  const int trunk_c = c, trunk_h = h, trunk_w = w;
  for (std::size_t k = 0; k < spec_.heads.size(); ++k) {
    c = trunk_c;
    h = trunk_h;
    w = trunk_w;
    emit(spec_.heads[k], "head" + std::to_string(k + 1), heads_);
  }
}

template <typename T>
Tensor<T> Network<T>::run_op(const Op& op, const Tensor<T>& x, const std::vector<Tensor<T>>& outputs) const {
  switch (op.kind) {
    case OpKind::Conv: {
      const auto g = ConvGeometry::make(x.c(), x.h(), x.w(), op.filters, op.kernel, op.stride);
      Tensor<T> y;
      conv2d_forward(g, x, params_[op.param].value.data(), params_[op.param + 1].value.data(), y);
      activate(op.act, spec_.leaky_slope, y);
      return y;
    }
    case OpKind::Upsample: return upsample2x(x);
    case OpKind::Concat: return concat_channels({&x, &outputs[op.skip]});
    case OpKind::Flatten: {
      Tensor<T> y(x.n(), static_cast<int>(x.shape().sample()), 1, 1);
      std::copy(x.data(), x.data() + x.size(), y.data());
      return y;
    }
    case OpKind::Dense: {
      const auto& wp = params_[op.param];
      if (static_cast<int>(x.shape().sample()) != wp.dims[1])
        throw InvalidInput(spec_.name + ": dense layer expects " + std::to_string(wp.dims[1]) + " features, got " +
                           std::to_string(x.shape().sample()) + " (input resolution differs from build)");
      Tensor<T> y = dense_forward(x, wp.value.data(), params_[op.param + 1].value.data(), op.filters);
      activate(op.act, spec_.leaky_slope, y);
      return y;
    }
  }
  throw InvalidState("unknown op");
}

template <typename T>
std::vector<Tensor<T>> Network<T>::forward(const Tensor<T>& input, Trace* trace) const {
  const FlushSubnormals ftz;
  if (input.c() != spec_.input_channels)
    throw InvalidInput(spec_.name + ": expected " + std::to_string(spec_.input_channels) + " input channels, got " +
                       std::to_string(input.c()));
  const int div = 1 << downsample_depth(spec_);
  if (input.h() % div != 0 || input.w() % div != 0 || input.h() == 0 || input.w() == 0)
    throw InvalidInput(spec_.name + ": input " + input.shape().str() + " is not divisible by " + std::to_string(div));

  std::vector<Tensor<T>> outputs;
  outputs.reserve(ops_.size());
  for (std::size_t i = 0; i < ops_.size(); ++i) {
    const Tensor<T>& x = i == 0 ? input : outputs[i - 1];
    outputs.push_back(run_op(ops_[i], x, outputs));
  }
  std::vector<Tensor<T>> heads;
  if (heads_.empty()) {
    heads.push_back(outputs.back());
  } else {
    for (const auto& h : heads_) heads.push_back(run_op(h, outputs.back(), outputs));
  }
  if (trace != nullptr) {
    trace->input = input;
    trace->outputs = std::move(outputs);
    trace->heads = heads;
  }
  return heads;
}

template <typename T>
void Network<T>::backward_op(const Op& op, const Tensor<T>& in, const Tensor<T>& out, Tensor<T> grad,
                             Tensor<T>* grad_in, std::vector<Tensor<T>>& grads) {
  switch (op.kind) {
    case OpKind::Conv: {
      activation_backward(op.act, spec_.leaky_slope, out, grad);
      const auto g = ConvGeometry::make(in.c(), in.h(), in.w(), op.filters, op.kernel, op.stride);
      conv2d_backward(g, in, params_[op.param].value.data(), grad, grad_in, params_[op.param].grad.data(),
                      params_[op.param + 1].grad.data());
      return;
    }
    case OpKind::Upsample:
      if (grad_in != nullptr) *grad_in = upsample2x_backward(grad);
      return;
    case OpKind::Concat: {
      add_into(grads[op.skip], slice_channels(grad, in.c(), grad.c() - in.c()));
      if (grad_in != nullptr) *grad_in = slice_channels(grad, 0, in.c());
      return;
    }
    case OpKind::Flatten:
      if (grad_in != nullptr) {
        *grad_in = Tensor<T>(in.shape());
        std::copy(grad.data(), grad.data() + grad.size(), grad_in->data());
      }
      return;
    case OpKind::Dense:
      activation_backward(op.act, spec_.leaky_slope, out, grad);
      dense_backward(in, params_[op.param].value.data(), op.filters, grad, grad_in, params_[op.param].grad.data(),
                     params_[op.param + 1].grad.data());
      return;
  }
}

template <typename T>
Tensor<T> Network<T>::backward(const Trace& trace, std::span<const Tensor<T>> head_grads, bool need_input_grad) {
  const FlushSubnormals ftz;
  const std::size_t n_heads = heads_.empty() ? 1 : heads_.size();
  if (head_grads.size() != n_heads)
    throw InvalidInput(spec_.name + ": expected " + std::to_string(n_heads) + " head gradients");
  if (trace.outputs.size() != ops_.size()) throw InvalidState(spec_.name + ": trace does not belong to this network");

  std::vector<Tensor<T>> grads(ops_.size());
  if (heads_.empty()) {
    if (!head_grads[0].empty()) {
      require_same_shape(head_grads[0], trace.outputs.back(), "network output gradient");
      grads.back() = head_grads[0];
    }
  } else {
    for (std::size_t k = 0; k < heads_.size(); ++k) {
      if (head_grads[k].empty()) continue;
      require_same_shape(head_grads[k], trace.heads[k], "network head gradient");
      Tensor<T> gi;
      backward_op(heads_[k], trace.outputs.back(), trace.heads[k], head_grads[k], &gi, grads);
      add_into(grads.back(), std::move(gi));
    }
  }

  Tensor<T> input_grad;
  for (std::size_t i = ops_.size(); i-- > 0;) {
    if (grads[i].empty()) continue;
    const Tensor<T>& in = i == 0 ? trace.input : trace.outputs[i - 1];
    const bool want = i > 0 || need_input_grad;
    Tensor<T> gi;
    backward_op(ops_[i], in, trace.outputs[i], std::move(grads[i]), want ? &gi : nullptr, grads);
    grads[i] = Tensor<T>();
    if (i > 0)
      add_into(grads[i - 1], std::move(gi));
    else if (want)
      input_grad = std::move(gi);
  }
  if (need_input_grad && input_grad.empty()) input_grad = Tensor<T>(trace.input.shape());
  return input_grad;
}

template <typename T>
void Network<T>::zero_grad() {
  for (auto& p : params_) std::fill(p.grad.begin(), p.grad.end(), T(0));
}

template <typename T>
std::size_t Network<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

template class Network<float>;
template class Network<double>;

}  // namespace posesynth::nn
