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

#include <cmath>
#include <stdexcept>

#include "svsep/error.hpp"
#include "svsep/evalx.hpp"
#include "svsep/inference.hpp"
#include "svsep/training.hpp"

namespace svsep {

namespace {

// Everything about one clip that does not depend on the threshold.
struct SweepClip {
  AudioBuffer mixture;
  std::vector<SoftMask> masks;
  std::vector<BssProjector> projectors;  // voice reference per channel
  std::vector<double> mixture_sdr;
};

std::vector<double> channel(const AudioBuffer& b, std::size_t c) {
  return std::vector<double>(b.channel(c).begin(), b.channel(c).end());
}

}  // namespace

ThresholdSweep sweep_threshold(const Model& model, const StftConfig& stft_config,
                               std::span<const ClipStems> clips, std::span<const double> grid,
                               std::size_t filter_length) {
  if (grid.empty()) throw std::invalid_argument("sweep_threshold: empty grid");
  if (clips.empty()) throw std::invalid_argument("sweep_threshold: no clips");
  for (double theta : grid)
    if (!(theta >= 0.0 && theta <= 1.0)) throw std::invalid_argument("sweep_threshold: grid outside [0, 1]");

  const NetworkPredictor predictor(model);
  std::vector<SweepClip> prepared;
  for (const auto& clip : clips) {
    if (clip.voice.frames() != clip.accompaniment.frames())
      throw DataError("clip " + clip.clip_id + ": stems differ in length");
    const auto voice = prepare_input(clip.voice, stft_config);
    const auto accomp = prepare_input(clip.accompaniment, stft_config);
    SweepClip sc{mix(voice, accomp), {}, {}, {}};
    sc.masks = estimate_channel_masks(sc.mixture, predictor, stft_config);
    for (std::size_t c = 0; c < voice.channels(); ++c) {
      sc.projectors.emplace_back(std::vector<std::vector<double>>{channel(voice, c)}, filter_length);
      sc.mixture_sdr.push_back(sdr(sc.projectors.back().decompose(channel(sc.mixture, c), 0)));
    }
    prepared.push_back(std::move(sc));
  }

  ThresholdSweep result;
  result.grid.assign(grid.begin(), grid.end());
  double best = -std::numeric_limits<double>::infinity();
  for (double theta : grid) {
    std::vector<double> values;
    for (const auto& sc : prepared) {
      const auto sep = separate_with_masks(sc.mixture, sc.masks, theta, stft_config);
      double value = 0.0;
      for (std::size_t c = 0; c < sc.projectors.size(); ++c) {
        const double s = sdr(sc.projectors[c].decompose(channel(sep.voice, c), 0));
        value += (s - sc.mixture_sdr[c]) / static_cast<double>(sc.projectors.size());
      }
      if (!std::isnan(value)) values.push_back(value);
    }
    const double g = values.empty() ? std::numeric_limits<double>::quiet_NaN() : gnsdr(values);
    result.gnsdr.push_back(g);
    // Strict improvement keeps the smaller threshold on ties.
    if (g > best) {
      best = g;
      result.theta = theta;
    }
  }
  if (!(best > -std::numeric_limits<double>::infinity()))
    throw DataError("sweep_threshold: voice NSDR undefined for every clip");
  return result;
}

}  // namespace svsep
