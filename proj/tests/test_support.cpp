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

#include "test_support.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace svsep::test {

NetworkGeometry tiny_geometry() {
  NetworkGeometry g;
  g.frames = 9;
  g.bins = 24;
  g.kernel_time = 3;
  g.kernel_freq = 3;
  g.conv_stages = {{2, 2}, {2, 2}};
  g.pool_width = 2;
  g.hidden = {8, 4};
  g.dropout = 0.5;
  return g;
}

GradientCheckResult gradient_check(std::size_t samples, std::uint64_t seed) {
  const auto g = tiny_geometry();
  BasicModel<double> model(g, seed);
  // Non-zero biases so that every bias gradient is exercised off the origin.
  std::mt19937_64 rng(seed + 1);
  std::uniform_real_distribution<double> small(-0.1, 0.1);
  for (std::size_t i = 1; i < model.params().size(); i += 2)
    for (auto& v : model.params()[i].values) v = small(rng);

  const auto batch = random_batch<double>(g, 2, seed + 2);
  const auto target = random_target<double>(g, 2, seed + 3);
  ForwardCache<double> cache;
  forward(model, batch, true, cache, &rng);
  const Gradients grads = backward(model, cache, target);

  std::vector<std::pair<std::size_t, std::size_t>> all;
  for (std::size_t p = 0; p < model.params().size(); ++p)
    for (std::size_t i = 0; i < model.params()[p].values.size(); ++i) all.emplace_back(p, i);
  std::shuffle(all.begin(), all.end(), rng);

  // Active-set signature of a pass: ReLU signs and pool winners.
  auto signature = [&](const ForwardCache<double>& c) {
    std::vector<std::uint32_t> sig;
    for (std::size_t l = 0; l < model.layers().size(); ++l) {
      const auto kind = model.layers()[l].kind;
      if (kind == LayerKind::kConv || kind == LayerKind::kDense)
        for (double v : c.activations[l + 1]) sig.push_back(v > 0.0);
      sig.insert(sig.end(), c.argmax[l].begin(), c.argmax[l].end());
    }
    return sig;
  };
  const auto base_signature = signature(cache);
  auto loss = [&](BasicModel<double>& m, bool& smooth) {
    ForwardCache<double> c = cache;
    const auto y = forward(m, batch, true, c, nullptr);
    smooth = smooth && signature(c) == base_signature;
    return cross_entropy<double>(y.data, target.data);
  };

  GradientCheckResult r;
  std::set<std::size_t> covered;
  for (auto [p, i] : all) {
    if (r.sampled == samples) break;
    double& w = model.params()[p].values[i];
    const double saved = w;
    bool smooth = true;
    w = saved + kGradientStep;
    const double up = loss(model, smooth);
    w = saved - kGradientStep;
    const double down = loss(model, smooth);
    w = saved;
    if (!smooth) {
      ++r.straddled;
      continue;
    }
    const double numeric = (up - down) / (2.0 * kGradientStep);
    const double analytic = grads[p][i];
    const double denom = std::max({std::abs(numeric), std::abs(analytic), kRelativeErrorFloor});
    r.max_relative_error = std::max(r.max_relative_error, std::abs(numeric - analytic) / denom);
    covered.insert(p / 2);
    ++r.sampled;
  }
  r.layers_covered = covered.size();
  r.layers_with_params = model.params().size() / 2;
  return r;
}

}  // namespace svsep::test

namespace svsep::test {

namespace {

Eigen::MatrixXd delay_matrix(const std::vector<std::vector<double>>& sources, std::size_t count,
                             std::size_t taps) {
  const std::size_t n = sources.front().size();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n + taps - 1),
                                            static_cast<Eigen::Index>(count * taps));
  for (std::size_t j = 0; j < count; ++j)
    for (std::size_t d = 0; d < taps; ++d)
      for (std::size_t t = 0; t < n; ++t)
        a(static_cast<Eigen::Index>(t + d), static_cast<Eigen::Index>(j * taps + d)) = sources[j][t];
  return a;
}

}  // namespace

BruteForceProjection brute_force_projection(const std::vector<double>& estimate,
                                            const std::vector<std::vector<double>>& sources,
                                            std::size_t taps) {
  const std::size_t n = estimate.size();
  Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n + taps - 1));
  for (std::size_t t = 0; t < n; ++t) e(static_cast<Eigen::Index>(t)) = estimate[t];
  const Eigen::MatrixXd a_target = delay_matrix(sources, 1, taps);
  const Eigen::MatrixXd a_all = delay_matrix(sources, sources.size(), taps);
  const Eigen::VectorXd p_target = a_target * a_target.householderQr().solve(e);
  const Eigen::VectorXd p_all = a_all * a_all.householderQr().solve(e);
  BruteForceProjection r;
  for (Eigen::Index t = 0; t < e.size(); ++t) {
    r.s_target.push_back(p_target(t));
    r.e_interf.push_back(p_all(t) - p_target(t));
    r.e_artif.push_back(e(t) - p_all(t));
  }
  return r;
}

}  // namespace svsep::test

namespace svsep::test {

StftConfig tiny_stft() { return {32, 8, 46, 8000}; }

ClipStems synthetic_stems(const std::string& id, std::size_t frames, std::size_t channels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0.0f, 0.2f);
  ClipStems c{id, AudioBuffer(channels, frames, 8000), AudioBuffer(channels, frames, 8000)};
  for (std::size_t ch = 0; ch < channels; ++ch) {
    auto v = c.voice.channel(ch);
    auto s = c.accompaniment.channel(ch);
    float lp = 0.0f;
    for (std::size_t i = 0; i < frames; ++i) {
      const bool on = (i / 200) % 2 == 0;
      v[i] = on ? 0.5f * static_cast<float>(std::sin(2.0 * std::numbers::pi * (1000.0 + 300.0 * ch) * i / 8000.0)) : 0.0f;
      lp = 0.8f * lp + 0.2f * g(rng);
      s[i] = lp;
    }
  }
  return c;
}

}  // namespace svsep::test
