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

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "svsep/dsp.hpp"

namespace svsep {

/// Dense row-major tensor.
template <typename T>
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims, T fill = T{})
      : shape(std::move(dims)), data(element_count(shape), fill) {}

  static std::size_t element_count(const std::vector<std::size_t>& dims) {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
  }

  std::size_t size() const noexcept { return data.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }
};

/// Hyper-geometry of the mask network. The defaults reproduce the published
/// stack; smaller instances keep the same layer sequence.
struct NetworkGeometry {
  std::size_t frames = kExcerptFrames;
  std::size_t bins = 2049;
  std::size_t kernel_time = 3;
  std::size_t kernel_freq = 12;
  /// Conv output channels grouped per stage; each stage ends in a max-pool.
  std::vector<std::vector<std::size_t>> conv_stages = {{32, 16}, {64, 32}};
  std::size_t pool_width = 12;
  /// Hidden fully-connected widths, each preceded by dropout.
  std::vector<std::size_t> hidden = {2048, 512};
  double dropout = 0.5;

  static NetworkGeometry full() { return {}; }

  std::size_t input_size() const noexcept { return frames * bins; }
  std::size_t output_size() const noexcept { return frames * bins; }
  void validate() const;

  friend bool operator==(const NetworkGeometry&, const NetworkGeometry&) = default;
};

enum class LayerKind { kConv, kMaxPool, kDropout, kDense, kSigmoidOutput };

std::string_view to_string(LayerKind kind);

struct LayerSpec {
  LayerKind kind = LayerKind::kConv;
  std::string name;
  // Feature-map geometry (conv and pool). Time extent is always `frames`.
  std::size_t frames = 0;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t in_width = 0;
  std::size_t out_width = 0;
  std::size_t kernel_time = 0;
  std::size_t kernel_freq = 0;
  std::size_t pool_width = 0;
  double dropout = 0.0;
  // Flattened sizes, valid for every kind.
  std::size_t in_features = 0;
  std::size_t out_features = 0;

  bool has_params() const noexcept {
    return kind == LayerKind::kConv || kind == LayerKind::kDense ||
           kind == LayerKind::kSigmoidOutput;
  }
  std::size_t weight_count() const noexcept;
  std::size_t parameter_count() const noexcept {
    return has_params() ? weight_count() + out_channels_or_features() : 0;
  }
  std::size_t out_channels_or_features() const noexcept {
    return kind == LayerKind::kConv ? out_channels : out_features;
  }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// conv... pool ... (dropout, dense)... output, following `geometry`.
std::vector<LayerSpec> build_layers(const NetworkGeometry& geometry);

template <typename S>
struct ParamTensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<S> values;

  friend bool operator==(const ParamTensor&, const ParamTensor&) = default;
};

/// The mask network: layer stack plus trainable parameters. Conv weights are
/// [out, in, kernel_time, kernel_freq]; dense weights are [out, in].
template <typename S>
class BasicModel {
 public:
  BasicModel() = default;
  /// Xavier-uniform weights, zero biases; deterministic in `seed`.
  BasicModel(NetworkGeometry geometry, std::uint64_t seed);

  const NetworkGeometry& geometry() const noexcept { return geometry_; }
  const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
  std::uint64_t seed() const noexcept { return seed_; }

  std::vector<ParamTensor<S>>& params() noexcept { return params_; }
  const std::vector<ParamTensor<S>>& params() const noexcept { return params_; }

  /// Index into params() of the weight tensor of layer `layer`; the bias
  /// follows it. Throws std::out_of_range for parameter-free layers.
  std::size_t weight_index(std::size_t layer) const;

  std::size_t parameter_count() const noexcept;
  std::size_t layer_parameter_count(std::size_t layer) const { return layers_.at(layer).parameter_count(); }

  template <typename U>
  BasicModel<U> cast() const {
    BasicModel<U> out;
    out.geometry_ = geometry_;
    out.layers_ = layers_;
    out.seed_ = seed_;
    out.param_of_layer_ = param_of_layer_;
    for (const auto& p : params_)
      out.params_.push_back({p.name, p.shape, std::vector<U>(p.values.begin(), p.values.end())});
    return out;
  }

  friend bool operator==(const BasicModel&, const BasicModel&) = default;

 private:
  template <typename>
  friend class BasicModel;

  NetworkGeometry geometry_;
  std::vector<LayerSpec> layers_;
  std::vector<ParamTensor<S>> params_;
  std::vector<std::size_t> param_of_layer_;
  std::uint64_t seed_ = 0;
};

using Model = BasicModel<float>;

Model build_model(std::uint64_t seed, const NetworkGeometry& geometry = NetworkGeometry::full());

template <typename S>
std::size_t parameter_count(const BasicModel<S>& model) {
  return model.parameter_count();
}

/// Activations and dropout decisions recorded by a forward pass.
template <typename S>
struct ForwardCache {
  bool training = false;
  std::size_t batch = 0;
  /// activations[l] is the input of layer l; the last entry is the output.
  std::vector<std::vector<S>> activations;
  /// Per layer: flat argmax index into the pool input (pool layers only).
  std::vector<std::vector<std::uint32_t>> argmax;
  /// Per layer: keep flags (dropout layers only).
  std::vector<std::vector<std::uint8_t>> keep;
};

/// Inference: dropout disabled. `batch` is [B, frames, bins]; result is
/// [B, frames * bins] probabilities.
template <typename S>
Tensor<S> forward(const BasicModel<S>& model, const Tensor<S>& batch);

/// Full forward pass recording what backward() needs. In training mode
/// dropout keep flags are drawn from `dropout_rng`, or reused from `cache`
/// when `dropout_rng` is null (throws InvalidState if there are none).
template <typename S>
Tensor<S> forward(const BasicModel<S>& model, const Tensor<S>& batch, bool training,
                  ForwardCache<S>& cache, std::mt19937_64* dropout_rng);

/// One gradient vector per parameter tensor, accumulated in double.
using Gradients = std::vector<std::vector<double>>;

/// Exact gradients of the mean cross entropy of the pass recorded in
/// `cache` against `target` ([B, frames * bins]). Requires a training-mode
/// forward (InvalidState otherwise).
template <typename S>
Gradients backward(const BasicModel<S>& model, const ForwardCache<S>& cache,
                   const Tensor<S>& target);

/// Mean over all bins of -[t log y + (1 - t) log(1 - y)], with y clamped
/// away from 0 and 1 by 1e-12 inside the logarithms.
template <typename S>
double cross_entropy(std::span<const S> pred, std::span<const S> target);

inline constexpr double kLogClamp = 1e-12;

}  // namespace svsep
