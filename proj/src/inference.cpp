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

#include "svsep/inference.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "svsep/error.hpp"

namespace svsep {

namespace {

constexpr std::size_t kMiddle = kExcerptFrames / 2;

void check_batch(const Tensor<float>& batch, std::span<const std::size_t> origins, std::span<float> out) {
  if (batch.shape.size() != 3 || batch.shape[0] != origins.size() || out.size() != batch.size())
    throw std::invalid_argument("MaskPredictor: batch, origins and output disagree");
}

}  // namespace

void NetworkPredictor::predict(const Tensor<float>& batch, std::span<const std::size_t> origins,
                               std::span<float> out) const {
  check_batch(batch, origins, out);
  const auto y = forward(model_, batch);
  std::copy(y.data.begin(), y.data.end(), out.begin());
}

ConstantPredictor::ConstantPredictor(float value) : value_(value) {
  if (!(value >= 0.0f && value <= 1.0f)) throw std::invalid_argument("ConstantPredictor: value outside [0, 1]");
}

void ConstantPredictor::predict(const Tensor<float>& batch, std::span<const std::size_t> origins,
                                std::span<float> out) const {
  check_batch(batch, origins, out);
  std::fill(out.begin(), out.end(), value_);
}

void FixedMaskPredictor::predict(const Tensor<float>& batch, std::span<const std::size_t> origins,
                                 std::span<float> out) const {
  check_batch(batch, origins, out);
  const std::size_t f = mask_.bins();
  if (batch.shape[2] != f) throw std::invalid_argument("FixedMaskPredictor: bin count mismatch");
  for (std::size_t b = 0; b < origins.size(); ++b) {
    if (origins[b] + kExcerptFrames > mask_.frames())
      throw std::invalid_argument("FixedMaskPredictor: excerpt beyond the mask");
    copy_excerpt(mask_.values(), origins[b], out.subspan(b * kExcerptFrames * f, kExcerptFrames * f));
  }
}

SoftMask estimate_soft_mask(const MaskPredictor& predictor, const Spectrogram& spec,
                            std::size_t batch_size) {
  const std::size_t frames = spec.frames();
  const std::size_t f = spec.bins();
  if (frames < kExcerptFrames)
    throw std::invalid_argument("estimate_soft_mask: need at least 9 frames, got " + std::to_string(frames));
  if (batch_size < 1) throw std::invalid_argument("estimate_soft_mask: batch_size must be >= 1");

  const auto origins = excerpt_origins(frames, 1);
  const std::size_t last = origins.back();
  const std::size_t excerpt = kExcerptFrames * f;
  TfMatrix<float> mask(f, frames);
  std::vector<float> out;

  for (std::size_t start = 0; start < origins.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, origins.size() - start);
    std::span<const std::size_t> batch_origins(origins.data() + start, n);
    Tensor<float> batch({n, kExcerptFrames, f});
    for (std::size_t b = 0; b < n; ++b)
      copy_excerpt(spec.magnitude, batch_origins[b], std::span(batch.data).subspan(b * excerpt, excerpt));
    out.assign(n * excerpt, 0.0f);
    predictor.predict(batch, batch_origins, out);

    for (std::size_t b = 0; b < n; ++b) {
      const std::size_t origin = batch_origins[b];
      const float* pred = out.data() + b * excerpt;
      auto write = [&](std::size_t k) {
        auto col = mask.frame(origin + k);
        for (std::size_t i = 0; i < f; ++i) col[i] = std::clamp(pred[k * f + i], 0.0f, 1.0f);
      };
      write(kMiddle);
      if (origin == 0)
        for (std::size_t k = 0; k < kMiddle; ++k) write(k);
      if (origin == last)
        for (std::size_t k = kMiddle + 1; k < kExcerptFrames; ++k) write(k);
    }
  }
  return SoftMask(std::move(mask));
}

SoftMask estimate_soft_mask(const Model& model, const Spectrogram& spec) {
  return estimate_soft_mask(NetworkPredictor(model), spec);
}

AudioBuffer prepare_input(const AudioBuffer& audio, const StftConfig& config) {
  config.validate();
  if (audio.channels() > 2)
    throw UnsupportedFormat("separate: " + std::to_string(audio.channels()) + " channels (1 or 2 supported)");
  auto prepared = resample(audio, config.sample_rate);
  if (prepared.frames() < static_cast<std::size_t>(config.window_size))
    throw std::invalid_argument("separate: input shorter than one analysis window");
  return prepared;
}

std::vector<SoftMask> estimate_channel_masks(const AudioBuffer& prepared, const MaskPredictor& predictor,
                                             const StftConfig& config) {
  std::vector<SoftMask> masks;
  for (std::size_t c = 0; c < prepared.channels(); ++c)
    masks.push_back(estimate_soft_mask(predictor, stft(prepared.channel(c), prepared.sample_rate(), config)));
  return masks;
}

SeparationResult separate_with_masks(const AudioBuffer& prepared, std::vector<SoftMask> voice_masks,
                                     double theta, const StftConfig& config) {
  if (voice_masks.size() != prepared.channels())
    throw std::invalid_argument("separate: one voice mask per channel required");
  const std::size_t n = prepared.frames();
  SeparationResult r{AudioBuffer(prepared.channels(), n, prepared.sample_rate()),
                     AudioBuffer(prepared.channels(), n, prepared.sample_rate()), {}, theta};
  for (std::size_t c = 0; c < prepared.channels(); ++c) {
    const auto spec = stft(prepared.channel(c), prepared.sample_rate(), config);
    const auto voice_mask = threshold(voice_masks[c], theta);
    const auto accomp_mask = complement(voice_mask);
    const auto v = apply_mask(voice_mask, spec);
    const auto s = apply_mask(accomp_mask, spec);
    // The last partial hop is not covered by any frame; it stays silent.
    std::copy_n(v.begin(), std::min(n, v.size()), r.voice.channel(c).begin());
    std::copy_n(s.begin(), std::min(n, s.size()), r.accompaniment.channel(c).begin());
  }
  r.voice_masks = std::move(voice_masks);
  return r;
}

SeparationResult separate(const AudioBuffer& audio, const MaskPredictor& predictor, double theta,
                          const StftConfig& config) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw std::invalid_argument("separate: theta must lie in [0, 1]");
  const auto prepared = prepare_input(audio, config);
  return separate_with_masks(prepared, estimate_channel_masks(prepared, predictor, config), theta, config);
}

SeparationResult separate(const AudioBuffer& audio, const Model& model, double theta,
                          const StftConfig& config) {
  if (model.geometry().bins != config.bins())
    throw std::invalid_argument("separate: model and STFT config disagree on the bin count");
  return separate(audio, NetworkPredictor(model), theta, config);
}

SeparationResult separate_with_ibm(const ClipStems& stems, const StftConfig& config) {
  if (stems.voice.frames() != stems.accompaniment.frames() ||
      stems.voice.channels() != stems.accompaniment.channels() ||
      stems.voice.sample_rate() != stems.accompaniment.sample_rate())
    throw DataError("clip " + stems.clip_id + ": stems do not match");
  const auto voice = prepare_input(stems.voice, config);
  const auto accomp = prepare_input(stems.accompaniment, config);
  const auto mixture = mix(voice, accomp);
  std::vector<SoftMask> masks;
  for (std::size_t c = 0; c < voice.channels(); ++c) {
    const auto vs = stft(voice.channel(c), voice.sample_rate(), config);
    const auto ss = stft(accomp.channel(c), accomp.sample_rate(), config);
    masks.push_back(SoftMask::from(ideal_binary_mask(vs.magnitude, ss.magnitude)));
  }
  return separate_with_masks(mixture, std::move(masks), 0.0, config);
}

}  // namespace svsep
