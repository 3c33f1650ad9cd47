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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "svsep/error.hpp"
#include "svsep/network.hpp"
#include "test_support.hpp"

using namespace svsep;

TEST_CASE("default network parameter accounting") {
  const Model m = build_model(7);
  CHECK(m.parameter_count() == 19'489'049u);
  const auto& layers = m.layers();
  std::vector<std::size_t> counts;
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (layers[i].has_params()) counts.push_back(m.layer_parameter_count(i));
  const std::vector<std::size_t> table = {1'184, 18'448, 36'928, 73'760, 8'849'408, 1'049'088, 9'460'233};
  CHECK(counts == table);

  // Pooled widths and the flattened feature count.
  std::vector<std::size_t> pooled;
  for (const auto& l : layers)
    if (l.kind == LayerKind::kMaxPool) pooled.push_back(l.out_width);
  CHECK(pooled == std::vector<std::size_t>{171, 15});
  CHECK(layers.back().out_features == 18'441u);
}

TEST_CASE("cross entropy closed forms") {
  std::vector<double> half(10, 0.5), t(10, 1.0);
  CHECK(cross_entropy<double>(half, t) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  std::vector<double> smoothed = {0.02, 0.98, 0.98, 0.02};
  const double floor = -(0.98 * std::log(0.98) + 0.02 * std::log(0.02));
  CHECK(cross_entropy<double>(smoothed, smoothed) == doctest::Approx(floor).epsilon(1e-12));
  CHECK(floor == doctest::Approx(0.0980).epsilon(1e-3));
  std::vector<double> bin = {0.0, 1.0};
  CHECK(cross_entropy<double>(bin, bin) < 1e-11);
  std::vector<double> shorter = {0.5};
  CHECK_THROWS_AS(cross_entropy<double>(shorter, bin), std::invalid_argument);
}

TEST_CASE("forward rejects wrong batch shapes and stays in (0,1)") {
  const auto g = test::tiny_geometry();
  const auto model = BasicModel<double>(g, 3);
  Tensor<double> bad({2, g.frames, g.bins + 1});
  CHECK_THROWS_AS(forward(model, bad), std::invalid_argument);

  auto batch = test::random_batch<double>(g, 3, 11);
  const auto y1 = forward(model, batch);
  const auto y2 = forward(model, batch);
  CHECK(y1.data == y2.data);
  CHECK(std::all_of(y1.data.begin(), y1.data.end(), [](double v) { return v > 0.0 && v < 1.0; }));
}

TEST_CASE("backward needs a training-mode pass") {
  const auto g = test::tiny_geometry();
  const auto model = BasicModel<double>(g, 3);
  auto batch = test::random_batch<double>(g, 2, 5);
  ForwardCache<double> cache;
  const auto y = forward(model, batch, false, cache, nullptr);
  CHECK_THROWS_AS(backward(model, cache, y), InvalidState);
  ForwardCache<double> empty;
  CHECK_THROWS_AS(forward(model, batch, true, empty, nullptr), InvalidState);
}

TEST_CASE("output-layer gradients vanish when prediction equals target") {
  const auto g = test::tiny_geometry();
  const auto model = BasicModel<double>(g, 9);
  auto batch = test::random_batch<double>(g, 2, 8);
  ForwardCache<double> cache;
  std::mt19937_64 rng(1);
  const auto y = forward(model, batch, true, cache, &rng);
  const auto grads = backward(model, cache, y);
  const std::size_t w = model.weight_index(model.layers().size() - 1);
  for (std::size_t p = w; p < grads.size(); ++p)
    for (double v : grads[p]) CHECK(v == 0.0);
}

TEST_CASE("batch gradient is the mean of per-example gradients") {
  auto g = test::tiny_geometry();
  g.dropout = 0.0;
  const auto model = BasicModel<double>(g, 21);
  auto batch = test::random_batch<double>(g, 2, 4);
  auto target = test::random_target<double>(g, 2, 6);
  auto grad_of = [&](const Tensor<double>& x, const Tensor<double>& t) {
    ForwardCache<double> c;
    std::mt19937_64 rng(0);
    forward(model, x, true, c, &rng);
    return backward(model, c, t);
  };
  const auto both = grad_of(batch, target);
  const std::size_t in = g.input_size(), out = g.output_size();
  auto slice = [](const Tensor<double>& t, std::size_t i, std::size_t n, std::vector<std::size_t> shape) {
    Tensor<double> s(std::move(shape));
    std::copy_n(t.data.begin() + static_cast<std::ptrdiff_t>(i * n), n, s.data.begin());
    return s;
  };
  const auto a = grad_of(slice(batch, 0, in, {1, g.frames, g.bins}), slice(target, 0, out, {1, out}));
  const auto b = grad_of(slice(batch, 1, in, {1, g.frames, g.bins}), slice(target, 1, out, {1, out}));
  double worst = 0.0;
  for (std::size_t p = 0; p < both.size(); ++p)
    for (std::size_t i = 0; i < both[p].size(); ++i)
      worst = std::max(worst, std::abs(both[p][i] - 0.5 * (a[p][i] + b[p][i])));
  CHECK(worst < 1e-12);
}

TEST_CASE("finite-difference gradient check on every layer kind") {
  const auto result = test::gradient_check(1000, 2024);
  INFO("max relative error " << result.max_relative_error << ", straddled " << result.straddled);
  CHECK(result.sampled >= 1000u);
  CHECK(result.layers_covered == result.layers_with_params);
  CHECK(result.max_relative_error < 1e-4);
  MESSAGE("gradient check: max relative error " << result.max_relative_error << ", redrawn " << result.straddled);
}

TEST_CASE("dropout averages to the inference activation") {
  // One dropout layer between two dense layers exposes the expectation.
  auto g = test::tiny_geometry();
  g.hidden = {6};
  const auto model = BasicModel<double>(g, 12);
  auto batch = test::random_batch<double>(g, 1, 3);
  ForwardCache<double> eval;
  forward(model, batch, false, eval, nullptr);
  const std::size_t drop = [&] {
    for (std::size_t i = 0; i < model.layers().size(); ++i)
      if (model.layers()[i].kind == LayerKind::kDropout) return i;
    return std::size_t{0};
  }();
  const auto& ref = eval.activations[drop];

  std::vector<double> mean(eval.activations[drop + 1].size(), 0.0);
  std::mt19937_64 rng(77);
  const int draws = 20000;
  for (int k = 0; k < draws; ++k) {
    ForwardCache<double> c;
    forward(model, batch, true, c, &rng);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += c.activations[drop + 1][i] / draws;
  }
  const double ref_norm = std::sqrt(std::inner_product(ref.begin(), ref.end(), ref.begin(), 0.0));
  double diff = 0.0;
  for (std::size_t i = 0; i < mean.size(); ++i) diff += (mean[i] - ref[i]) * (mean[i] - ref[i]);
  CHECK(std::sqrt(diff) / ref_norm < 0.02);
}

TEST_CASE("max-pool gradient routes to the first maximum") {
  NetworkGeometry g;
  g.frames = 1;
  g.bins = 4;
  g.kernel_time = 1;
  g.kernel_freq = 1;
  g.conv_stages = {{1}};
  g.pool_width = 4;
  g.hidden = {};
  g.dropout = 0.0;
  BasicModel<double> model(g, 1);
  // Identity convolution keeps the tie intact through the ReLU.
  model.params()[0].values = {1.0};
  model.params()[1].values = {0.0};
  Tensor<double> x({1, 1, 4});
  x.data = {0.3, 0.9, 0.9, 0.1};
  Tensor<double> t({1, 4}, 0.5);
  ForwardCache<double> c;
  std::mt19937_64 rng(0);
  forward(model, x, true, c, &rng);
  std::size_t pool = 0;
  for (std::size_t i = 0; i < model.layers().size(); ++i)
    if (model.layers()[i].kind == LayerKind::kMaxPool) pool = i;
  REQUIRE(c.argmax[pool].size() == 1);
  CHECK(c.argmax[pool][0] == 1u);

  // Without a tie, perturbing the maximum moves the output and perturbing
  // any other position does not.
  x.data = {0.3, 0.9, 0.5, 0.1};
  const auto base = forward(model, x);
  for (std::size_t i = 0; i < 4; ++i) {
    auto bumped = x;
    bumped.data[i] += 1e-3;
    if (i == 1)
      CHECK(forward(model, bumped).data != base.data);
    else
      CHECK(forward(model, bumped).data == base.data);
  }
}

TEST_CASE("initialisation is deterministic in the seed") {
  const auto g = test::tiny_geometry();
  CHECK(BasicModel<float>(g, 5) == BasicModel<float>(g, 5));
  CHECK_FALSE(BasicModel<float>(g, 5) == BasicModel<float>(g, 6));
  const BasicModel<float> m(g, 5);
  for (std::size_t i = 0; i < m.layers().size(); ++i) {
    if (!m.layers()[i].has_params()) continue;
    const auto& l = m.layers()[i];
    const auto& w = m.params()[m.weight_index(i)].values;
    const double fan_in = static_cast<double>(l.kind == LayerKind::kConv
                                                  ? l.in_channels * l.kernel_time * l.kernel_freq
                                                  : l.in_features);
    const double fan_out = static_cast<double>(l.kind == LayerKind::kConv
                                                   ? l.out_channels * l.kernel_time * l.kernel_freq
                                                   : l.out_features);
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    CHECK(std::all_of(w.begin(), w.end(), [&](float v) { return std::abs(v) <= bound * (1.0 + 1e-6); }));
    const auto& b = m.params()[m.weight_index(i) + 1].values;
    CHECK(std::all_of(b.begin(), b.end(), [](float v) { return v == 0.0f; }));
  }
}
