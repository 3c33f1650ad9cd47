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
#include <span>
#include <vector>

#include "svsep/audio.hpp"
#include "svsep/tf_matrix.hpp"

namespace svsep {

/// Number of spectrogram frames in one network excerpt.
inline constexpr std::size_t kExcerptFrames = 9;

struct StftConfig {
  int window_size = 1024;  // W
  int hop_size = 256;      // H
  int fft_size = 4096;     // N, W zero-padded at the tail up to N
  int sample_rate = 22050;

  std::size_t bins() const noexcept { return static_cast<std::size_t>(fft_size) / 2 + 1; }

  /// Throws std::invalid_argument unless N >= W, H divides W and all are positive.
  void validate() const;

  /// Frame count for a signal of `samples` samples (0 if shorter than W).
  std::size_t frame_count(std::size_t samples) const noexcept;

  /// Length of the overlap-add output for `frames` frames.
  std::size_t signal_length(std::size_t frames) const noexcept;

  friend bool operator==(const StftConfig&, const StftConfig&) = default;
};

struct Spectrogram {
  TfMatrix<double> magnitude;
  TfMatrix<double> phase;  // radians
  StftConfig config;

  std::size_t bins() const noexcept { return magnitude.bins(); }
  std::size_t frames() const noexcept { return magnitude.frames(); }
};

/// A 9-frame slice of a magnitude spectrogram, stored frame-major (9 x F).
struct Excerpt {
  std::size_t origin = 0;
  TfMatrix<float> frames;
};

/// Periodic Hann window 0.5 - 0.5 cos(2 pi k / size).
std::vector<double> hann_window(int size);

Spectrogram stft(std::span<const float> samples, int sample_rate, const StftConfig& config);

/// `audio` must be single-channel.
Spectrogram stft(const AudioBuffer& audio, const StftConfig& config);

/// Fraction of the peak squared-window sum below which the overlap-add
/// normalizer is clamped.
inline constexpr double kIstftNormFloor = 0.1;

/// Weighted overlap-add inverse with squared-window normalization, the
/// normalizer clamped from below at kIstftNormFloor times its peak.
/// Output length is (T - 1) H + W samples.
std::vector<float> istft(const Spectrogram& spec);

/// Inverse of an explicit magnitude/phase pair sharing `config`.
std::vector<float> istft(const TfMatrix<double>& magnitude, const TfMatrix<double>& phase,
                         const StftConfig& config);

/// Band-limited windowed-sinc resampler. Output length is
/// floor(frames * target_rate / sample_rate); equal rates return a copy.
AudioBuffer resample(const AudioBuffer& audio, int target_rate);

/// Excerpt origins 0, hop, 2 hop, ... while 9 frames fit.
std::vector<std::size_t> excerpt_origins(std::size_t frames, std::size_t hop_frames);

std::vector<Excerpt> excerpts(const Spectrogram& spec, std::size_t hop_frames);

/// Copies frames [origin, origin + 9) of `m` into `out` (frame-major, 9 x F).
template <typename T, typename U>
void copy_excerpt(const TfMatrix<T>& m, std::size_t origin, std::span<U> out) {
  const std::size_t f = m.bins();
  for (std::size_t k = 0; k < kExcerptFrames; ++k) {
    auto src = m.frame(origin + k);
    for (std::size_t n = 0; n < f; ++n) out[k * f + n] = static_cast<U>(src[n]);
  }
}

}  // namespace svsep
