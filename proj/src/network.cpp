// Copyright 2026 The svsep Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "svsep/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "svsep/error.hpp"
#include "svsep/parallel.hpp"
#include "svsep/random.hpp"

namespace svsep {

void NetworkGeometry::validate() const {
  if (frames == 0 || bins == 0) throw std::invalid_argument("NetworkGeometry: empty input");
  if (kernel_time == 0 || kernel_freq == 0 || pool_width == 0)
    throw std::invalid_argument("NetworkGeometry: kernel and pool sizes must be positive");
  for (const auto& stage : conv_stages) {
    if (stage.empty()) throw std::invalid_argument("NetworkGeometry: empty conv stage");
    for (auto c : stage)
      if (c == 0) throw std::invalid_argument("NetworkGeometry: zero conv channels");
  }
  for (auto h : hidden)
    if (h == 0) throw std::invalid_argument("NetworkGeometry: zero hidden width");
  if (!(dropout >= 0.0 && dropout < 1.0))
    throw std::invalid_argument("NetworkGeometry: dropout must lie in [0, 1)");
}

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv: return "conv";
    case LayerKind::kMaxPool: return "maxpool";
    case LayerKind::kDropout: return "dropout";
    case LayerKind::kDense: return "dense";
    case LayerKind::kSigmoidOutput: return "sigmoid-output";
  }
  return "unknown";
}

std::size_t LayerSpec::weight_count() const noexcept {
  switch (kind) {
    case LayerKind::kConv: return kernel_time * kernel_freq * in_channels * out_channels;
    case LayerKind::kDense:
    case LayerKind::kSigmoidOutput: return in_features * out_features;
    default: return 0;
  }
}

std::vector<LayerSpec> build_layers(const NetworkGeometry& g) {
  g.validate();
  std::vector<LayerSpec> layers;
  std::size_t channels = 1;
  std::size_t width = g.bins;
  int conv_no = 0;
  int pool_no = 0;
  for (const auto& stage : g.conv_stages) {
    for (auto out : stage) {
      LayerSpec l;
      l.kind = LayerKind::kConv;
      l.name = "conv" + std::to_string(++conv_no);
      l.frames = g.frames;
      l.in_channels = channels;
      l.out_channels = out;
      l.in_width = l.out_width = width;
      l.kernel_time = g.kernel_time;
      l.kernel_freq = g.kernel_freq;
      l.in_features = channels * g.frames * width;
      l.out_features = out * g.frames * width;
      layers.push_back(l);
      channels = out;
    }
    LayerSpec p;
    p.kind = LayerKind::kMaxPool;
    p.name = "pool" + std::to_string(++pool_no);
    p.frames = g.frames;
    p.in_channels = p.out_channels = channels;
    p.in_width = width;
    p.out_width = (width + g.pool_width - 1) / g.pool_width;
    p.pool_width = g.pool_width;
    p.in_features = channels * g.frames * width;
    p.out_features = channels * g.frames * p.out_width;
    layers.push_back(p);
    width = p.out_width;
  }
  std::size_t features = channels * g.frames * width;
  int dense_no = 0;
  for (auto h : g.hidden) {
    LayerSpec d;
    d.kind = LayerKind::kDropout;
    d.name = "dropout" + std::to_string(dense_no + 1);
    d.dropout = g.dropout;
    d.in_features = d.out_features = features;
    layers.push_back(d);
    LayerSpec f;
    f.kind = LayerKind::kDense;
    f.name = "dense" + std::to_string(++dense_no);
    f.in_features = features;
    f.out_features = h;
    layers.push_back(f);
    features = h;
  }
  LayerSpec out;
  out.kind = LayerKind::kSigmoidOutput;
  out.name = "output";
  out.in_features = features;
  out.out_features = g.output_size();
  layers.push_back(out);
  return layers;
}

template <typename S>
BasicModel<S>::BasicModel(NetworkGeometry geometry, std::uint64_t seed)
    : geometry_(std::move(geometry)), layers_(build_layers(geometry_)), seed_(seed) {
  param_of_layer_.assign(layers_.size(), static_cast<std::size_t>(-1));
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const auto& l = layers_[li];
    if (!l.has_params()) continue;
    double fan_in = 0;
    double fan_out = 0;
    std::vector<std::size_t> wshape;
    if (l.kind == LayerKind::kConv) {
      const double area = static_cast<double>(l.kernel_time * l.kernel_freq);
      fan_in = area * static_cast<double>(l.in_channels);
      fan_out = area * static_cast<double>(l.out_channels);
      wshape = {l.out_channels, l.in_channels, l.kernel_time, l.kernel_freq};
    } else {
      fan_in = static_cast<double>(l.in_features);
      fan_out = static_cast<double>(l.out_features);
      wshape = {l.out_features, l.in_features};
    }
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    auto rng = make_stream(seed, "init", {li});
    std::uniform_real_distribution<double> dist(-limit, limit);
    ParamTensor<S> w{l.name + ".weight", wshape, std::vector<S>(l.weight_count())};
    for (auto& v : w.values) v = static_cast<S>(dist(rng));
    const std::size_t nb = l.out_channels_or_features();
    ParamTensor<S> b{l.name + ".bias", {nb}, std::vector<S>(nb, S{0})};
    param_of_layer_[li] = params_.size();
    params_.push_back(std::move(w));
    params_.push_back(std::move(b));
  }
}

template <typename S>
std::size_t BasicModel<S>::weight_index(std::size_t layer) const {
  const auto idx = param_of_layer_.at(layer);
  if (idx == static_cast<std::size_t>(-1))
    throw std::out_of_range("layer " + layers_.at(layer).name + " has no parameters");
  return idx;
}

template <typename S>
std::size_t BasicModel<S>::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.values.size();
  return n;
}

Model build_model(std::uint64_t seed, const NetworkGeometry& geometry) {
  return Model(geometry, seed);
}

namespace {

template <typename S>
double dot(const S* a, const S* b, std::size_t n) {
  double acc[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (std::size_t k = 0; k < 8; ++k)
      acc[k] += static_cast<double>(a[i + k]) * static_cast<double>(b[i + k]);
  }
  double s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
  for (; i < n; ++i) s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return s;
}

template <typename S>
void axpy(S alpha, const S* x, S* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

struct ConvShape {
  std::size_t c, o, t, w, kt, kf, pt, pf, tp, wp;
  explicit ConvShape(const LayerSpec& l)
      : c(l.in_channels), o(l.out_channels), t(l.frames), w(l.in_width), kt(l.kernel_time),
        kf(l.kernel_freq), pt((l.kernel_time - 1) / 2), pf((l.kernel_freq - 1) / 2),
        tp(l.frames + l.kernel_time - 1), wp(l.in_width + l.kernel_freq - 1) {}
};

// Same padding: (k - 1) / 2 zeros before, the rest after.
template <typename S>
void pad_input(const ConvShape& s, const S* in, std::vector<S>& padded) {
  padded.assign(s.c * s.tp * s.wp, S{0});
  for (std::size_t c = 0; c < s.c; ++c)
    for (std::size_t t = 0; t < s.t; ++t)
      std::copy_n(in + (c * s.t + t) * s.w, s.w, padded.data() + (c * s.tp + t + s.pt) * s.wp + s.pf);
}

template <typename S>
void conv_forward_item(const ConvShape& s, const S* weights, const S* bias, const S* in, S* out,
                       std::vector<S>& padded) {
  pad_input(s, in, padded);
  for (std::size_t o = 0; o < s.o; ++o) {
    S* out_o = out + o * s.t * s.w;
    std::fill_n(out_o, s.t * s.w, bias[o]);
    for (std::size_t c = 0; c < s.c; ++c) {
      for (std::size_t i = 0; i < s.kt; ++i) {
        for (std::size_t j = 0; j < s.kf; ++j) {
          const S wv = weights[((o * s.c + c) * s.kt + i) * s.kf + j];
          for (std::size_t t = 0; t < s.t; ++t)
            axpy(wv, padded.data() + (c * s.tp + t + i) * s.wp + j, out_o + t * s.w, s.w);
        }
      }
    }
    for (std::size_t k = 0; k < s.t * s.w; ++k) out_o[k] = std::max(out_o[k], S{0});
  }
}

template <typename S>
void maxpool_forward_item(const LayerSpec& l, const S* in, S* out, std::uint32_t* argmax) {
  const std::size_t rows = l.in_channels * l.frames;
  for (std::size_t r = 0; r < rows; ++r) {
    const S* row = in + r * l.in_width;
    for (std::size_t q = 0; q < l.out_width; ++q) {
      const std::size_t begin = q * l.pool_width;
      const std::size_t end = std::min(l.in_width, begin + l.pool_width);
      std::size_t best = begin;
      for (std::size_t f = begin + 1; f < end; ++f)
        if (row[f] > row[best]) best = f;
      out[r * l.out_width + q] = row[best];
      if (argmax) argmax[r * l.out_width + q] = static_cast<std::uint32_t>(r * l.in_width + best);
    }
  }
}

template <typename S>
S sigmoid(S z) {
  return S{1} / (S{1} + std::exp(-z));
}

template <typename S>
void dense_forward_item(const LayerSpec& l, const S* weights, const S* bias, const S* in, S* out) {
  for (std::size_t j = 0; j < l.out_features; ++j) {
    const S z = static_cast<S>(static_cast<double>(bias[j]) +
                               dot(weights + j * l.in_features, in, l.in_features));
    out[j] = l.kind == LayerKind::kDense ? std::max(z, S{0}) : sigmoid(z);
  }
}

template <typename S>
void check_batch(const BasicModel<S>& model, const Tensor<S>& batch) {
  const auto& g = model.geometry();
  if (batch.shape.size() != 3 || batch.shape[1] != g.frames || batch.shape[2] != g.bins ||
      batch.data.size() != Tensor<S>::element_count(batch.shape)) {
    throw std::invalid_argument("forward: batch must have shape [B, " + std::to_string(g.frames) +
                                ", " + std::to_string(g.bins) + "]");
  }
}

// Applies one layer to every item in the batch. `keep` and `argmax` are
// only touched for dropout and pool layers respectively.
template <typename S>
void run_layer(const BasicModel<S>& model, std::size_t li, std::size_t batch, bool training,
               const std::vector<S>& in, std::vector<S>& out, std::vector<std::uint32_t>* argmax,
               std::vector<std::uint8_t>* keep, std::mt19937_64* rng) {
  const auto& l = model.layers()[li];
  out.assign(batch * l.out_features, S{0});
  switch (l.kind) {
    case LayerKind::kConv: {
      const auto& w = model.params()[model.weight_index(li)].values;
      const auto& b = model.params()[model.weight_index(li) + 1].values;
      const ConvShape s(l);
      parallel_for(batch, [&](std::size_t begin, std::size_t end) {
        std::vector<S> padded;
        for (std::size_t n = begin; n < end; ++n)
          conv_forward_item(s, w.data(), b.data(), in.data() + n * l.in_features,
                            out.data() + n * l.out_features, padded);
      });
      break;
    }
    case LayerKind::kMaxPool: {
      if (argmax) argmax->assign(batch * l.out_features, 0);
      parallel_for(batch, [&](std::size_t begin, std::size_t end) {
        for (std::size_t n = begin; n < end; ++n)
          maxpool_forward_item(l, in.data() + n * l.in_features, out.data() + n * l.out_features,
                               argmax ? argmax->data() + n * l.out_features : nullptr);
      });
      break;
    }
    case LayerKind::kDropout: {
      if (!training || l.dropout == 0.0) {
        out = in;
        if (keep) keep->assign(in.size(), 1);
        break;
      }
      if (rng) {
        keep->resize(in.size());
        std::bernoulli_distribution draw(1.0 - l.dropout);
        for (auto& k : *keep) k = draw(*rng) ? 1 : 0;
      } else if (!keep || keep->size() != in.size()) {
        throw InvalidState("forward: no recorded dropout masks to reuse");
      }
      const S scale = static_cast<S>(1.0 / (1.0 - l.dropout));
      for (std::size_t k = 0; k < in.size(); ++k) out[k] = (*keep)[k] ? in[k] * scale : S{0};
      break;
    }
    case LayerKind::kDense:
    case LayerKind::kSigmoidOutput: {
      const auto& w = model.params()[model.weight_index(li)].values;
      const auto& b = model.params()[model.weight_index(li) + 1].values;
      parallel_for(batch, [&](std::size_t begin, std::size_t end) {
        for (std::size_t n = begin; n < end; ++n)
          dense_forward_item(l, w.data(), b.data(), in.data() + n * l.in_features,
                             out.data() + n * l.out_features);
      });
      break;
    }
  }
}

}  // namespace

template <typename S>
Tensor<S> forward(const BasicModel<S>& model, const Tensor<S>& batch) {
  check_batch(model, batch);
  const std::size_t n = batch.shape[0];
  std::vector<S> cur = batch.data;
  std::vector<S> next;
  for (std::size_t li = 0; li < model.layers().size(); ++li) {
    run_layer(model, li, n, false, cur, next, nullptr, nullptr, nullptr);
    std::swap(cur, next);
  }
  Tensor<S> out;
  out.shape = {n, model.geometry().output_size()};
  out.data = std::move(cur);
  return out;
}

template <typename S>
Tensor<S> forward(const BasicModel<S>& model, const Tensor<S>& batch, bool training,
                  ForwardCache<S>& cache, std::mt19937_64* dropout_rng) {
  check_batch(model, batch);
  const auto& layers = model.layers();
  const std::size_t n = batch.shape[0];
  if (training && !dropout_rng && (cache.batch != n || cache.keep.size() != layers.size()))
    throw InvalidState("forward: no recorded dropout masks to reuse");
  cache.training = training;
  cache.batch = n;
  cache.activations.resize(layers.size() + 1);
  cache.argmax.resize(layers.size());
  cache.keep.resize(layers.size());
  cache.activations[0] = batch.data;
  for (std::size_t li = 0; li < layers.size(); ++li) {
    run_layer(model, li, n, training, cache.activations[li], cache.activations[li + 1],
              &cache.argmax[li], &cache.keep[li], dropout_rng);
  }
  Tensor<S> out;
  out.shape = {n, model.geometry().output_size()};
  out.data = cache.activations.back();
  return out;
}

template <typename S>
Gradients backward(const BasicModel<S>& model, const ForwardCache<S>& cache,
                   const Tensor<S>& target) {
  if (!cache.training || cache.activations.size() != model.layers().size() + 1)
    throw InvalidState("backward: requires a preceding training-mode forward pass");
  const auto& layers = model.layers();
  const std::size_t batch = cache.batch;
  const auto& y = cache.activations.back();
  if (target.data.size() != y.size())
    throw std::invalid_argument("backward: target shape does not match the network output");

  Gradients grads(model.params().size());
  for (std::size_t i = 0; i < grads.size(); ++i) grads[i].assign(model.params()[i].values.size(), 0.0);

  // Sigmoid + mean cross entropy: dL/dz = (y - t) / (B * O).
  const double norm = 1.0 / static_cast<double>(y.size());
  std::vector<S> g(y.size());
  for (std::size_t k = 0; k < y.size(); ++k)
    g[k] = static_cast<S>((static_cast<double>(y[k]) - static_cast<double>(target.data[k])) * norm);

  for (std::size_t li = layers.size(); li-- > 0;) {
    const auto& l = layers[li];
    const auto& in = cache.activations[li];
    const auto& out = cache.activations[li + 1];
    const bool need_input_grad = li > 0;
    std::vector<S> gin;
    if (need_input_grad) gin.assign(in.size(), S{0});

    switch (l.kind) {
      case LayerKind::kConv: {
        const std::size_t wi = model.weight_index(li);
        const auto& w = model.params()[wi].values;
        auto& gw = grads[wi];
        auto& gb = grads[wi + 1];
        const ConvShape s(l);
        for (std::size_t k = 0; k < g.size(); ++k)
          if (!(out[k] > S{0})) g[k] = S{0};
        std::vector<S> padded;
        std::vector<S> gpad;
        for (std::size_t n = 0; n < batch; ++n) {
          const S* gout = g.data() + n * l.out_features;
          pad_input(s, in.data() + n * l.in_features, padded);
          parallel_for(s.o, [&](std::size_t ob, std::size_t oe) {
            for (std::size_t o = ob; o < oe; ++o) {
              const S* go = gout + o * s.t * s.w;
              double bsum = 0.0;
              for (std::size_t k = 0; k < s.t * s.w; ++k) bsum += static_cast<double>(go[k]);
              gb[o] += bsum;
              for (std::size_t c = 0; c < s.c; ++c)
                for (std::size_t i = 0; i < s.kt; ++i)
                  for (std::size_t j = 0; j < s.kf; ++j) {
                    double acc = 0.0;
                    for (std::size_t t = 0; t < s.t; ++t)
                      acc += dot(go + t * s.w, padded.data() + (c * s.tp + t + i) * s.wp + j, s.w);
                    gw[((o * s.c + c) * s.kt + i) * s.kf + j] += acc;
                  }
            }
          });
          if (!need_input_grad) continue;
          gpad.assign(s.c * s.tp * s.wp, S{0});
          parallel_for(s.c, [&](std::size_t cb, std::size_t ce) {
            for (std::size_t c = cb; c < ce; ++c)
              for (std::size_t o = 0; o < s.o; ++o)
                for (std::size_t i = 0; i < s.kt; ++i)
                  for (std::size_t j = 0; j < s.kf; ++j) {
                    const S wv = w[((o * s.c + c) * s.kt + i) * s.kf + j];
                    for (std::size_t t = 0; t < s.t; ++t)
                      axpy(wv, gout + (o * s.t + t) * s.w, gpad.data() + (c * s.tp + t + i) * s.wp + j, s.w);
                  }
          });
          S* gi = gin.data() + n * l.in_features;
          for (std::size_t c = 0; c < s.c; ++c)
            for (std::size_t t = 0; t < s.t; ++t)
              std::copy_n(gpad.data() + (c * s.tp + t + s.pt) * s.wp + s.pf, s.w, gi + (c * s.t + t) * s.w);
        }
        break;
      }
      case LayerKind::kMaxPool: {
        const auto& am = cache.argmax[li];
        for (std::size_t n = 0; n < batch; ++n) {
          S* gi = gin.data() + n * l.in_features;
          const S* go = g.data() + n * l.out_features;
          const std::uint32_t* a = am.data() + n * l.out_features;
          for (std::size_t k = 0; k < l.out_features; ++k) gi[a[k]] += go[k];
        }
        break;
      }
      case LayerKind::kDropout: {
        const auto& keep = cache.keep[li];
        const S scale = l.dropout == 0.0 ? S{1} : static_cast<S>(1.0 / (1.0 - l.dropout));
        for (std::size_t k = 0; k < g.size(); ++k) gin[k] = keep[k] ? g[k] * scale : S{0};
        break;
      }
      case LayerKind::kDense:
      case LayerKind::kSigmoidOutput: {
        const std::size_t wi = model.weight_index(li);
        const auto& w = model.params()[wi].values;
        auto& gw = grads[wi];
        auto& gb = grads[wi + 1];
        if (l.kind == LayerKind::kDense) {
          for (std::size_t k = 0; k < g.size(); ++k)
            if (!(out[k] > S{0})) g[k] = S{0};
        }
        const std::size_t nin = l.in_features;
        const std::size_t nout = l.out_features;
        parallel_for(nout, [&](std::size_t jb, std::size_t je) {
          for (std::size_t j = jb; j < je; ++j) {
            double* gwj = gw.data() + j * nin;
            for (std::size_t n = 0; n < batch; ++n) {
              const double gj = static_cast<double>(g[n * nout + j]);
              gb[j] += gj;
              if (gj == 0.0) continue;
              const S* x = in.data() + n * nin;
              for (std::size_t i = 0; i < nin; ++i) gwj[i] += gj * static_cast<double>(x[i]);
            }
          }
        });
        if (need_input_grad) {
          parallel_for(batch, [&](std::size_t nb, std::size_t ne) {
            for (std::size_t n = nb; n < ne; ++n) {
              S* gi = gin.data() + n * nin;
              for (std::size_t j = 0; j < nout; ++j) {
                const S gj = g[n * nout + j];
                if (gj != S{0}) axpy(gj, w.data() + j * nin, gi, nin);
              }
            }
          });
        }
        break;
      }
    }
    g = std::move(gin);
  }
  return grads;
}

template <typename S>
double cross_entropy(std::span<const S> pred, std::span<const S> target) {
  if (pred.size() != target.size() || pred.empty())
    throw std::invalid_argument("cross_entropy: prediction and target shapes differ");
  double sum = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const double y = static_cast<double>(pred[k]);
    const double t = static_cast<double>(target[k]);
    sum -= t * std::log(std::max(y, kLogClamp)) + (1.0 - t) * std::log(std::max(1.0 - y, kLogClamp));
  }
  return sum / static_cast<double>(pred.size());
}

template class BasicModel<float>;
template class BasicModel<double>;
template Tensor<float> forward(const BasicModel<float>&, const Tensor<float>&);
template Tensor<double> forward(const BasicModel<double>&, const Tensor<double>&);
template Tensor<float> forward(const BasicModel<float>&, const Tensor<float>&, bool,
                               ForwardCache<float>&, std::mt19937_64*);
template Tensor<double> forward(const BasicModel<double>&, const Tensor<double>&, bool,
                                ForwardCache<double>&, std::mt19937_64*);
template Gradients backward(const BasicModel<float>&, const ForwardCache<float>&,
                            const Tensor<float>&);
template Gradients backward(const BasicModel<double>&, const ForwardCache<double>&,
                            const Tensor<double>&);
template double cross_entropy(std::span<const float>, std::span<const float>);
template double cross_entropy(std::span<const double>, std::span<const double>);

}  // namespace svsep
