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

#include "svsep/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

#include "fft.hpp"

namespace svsep {

void StftConfig::validate() const {
  if (window_size < 2 || hop_size < 1 || fft_size < 2 || sample_rate <= 0)
    throw std::invalid_argument("StftConfig: sizes and sample rate must be positive");
  if (fft_size < window_size)
    throw std::invalid_argument("StftConfig: fft_size must be >= window_size");
  if (window_size % hop_size != 0)
    throw std::invalid_argument("StftConfig: window_size must be a multiple of hop_size");
}

std::size_t StftConfig::frame_count(std::size_t samples) const noexcept {
  const auto w = static_cast<std::size_t>(window_size);
  if (samples < w) return 0;
  return (samples - w) / static_cast<std::size_t>(hop_size) + 1;
}

std::size_t StftConfig::signal_length(std::size_t frames) const noexcept {
  if (frames == 0) return 0;
  return (frames - 1) * static_cast<std::size_t>(hop_size) +
         static_cast<std::size_t>(window_size);
}

std::vector<double> hann_window(int size) {
  if (size < 2) throw std::invalid_argument("hann_window: size must be >= 2");
  std::vector<double> w(static_cast<std::size_t>(size));
  for (int k = 0; k < size; ++k)
    w[k] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * k / size);
  return w;
}

Spectrogram stft(std::span<const float> samples, int sample_rate, const StftConfig& config) {
  config.validate();
  if (sample_rate != config.sample_rate)
    throw std::invalid_argument("stft: sample rate " + std::to_string(sample_rate) +
                                " does not match config rate " +
                                std::to_string(config.sample_rate));
  const auto w_len = static_cast<std::size_t>(config.window_size);
  if (samples.size() < w_len)
    throw std::invalid_argument("stft: signal shorter than the analysis window");

  const std::size_t frames = config.frame_count(samples.size());
  const std::size_t bins = config.bins();
  const auto window = hann_window(config.window_size);

  Spectrogram spec{TfMatrix<double>(bins, frames), TfMatrix<double>(bins, frames), config};
  detail::RealFft fft(static_cast<std::size_t>(config.fft_size));
  std::vector<double> frame(w_len);
  std::vector<std::complex<double>> out(bins);

  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t start = t * static_cast<std::size_t>(config.hop_size);
    for (std::size_t k = 0; k < w_len; ++k) frame[k] = samples[start + k] * window[k];
    fft.forward(frame, out);
    auto mag = spec.magnitude.frame(t);
    auto ph = spec.phase.frame(t);
    for (std::size_t n = 0; n < bins; ++n) {
      mag[n] = std::abs(out[n]);
      ph[n] = std::arg(out[n]);
    }
  }
  return spec;
}

Spectrogram stft(const AudioBuffer& audio, const StftConfig& config) {
  if (audio.channels() != 1) throw std::invalid_argument("stft: expected a mono buffer");
  return stft(audio.channel(0), audio.sample_rate(), config);
}

std::vector<float> istft(const TfMatrix<double>& magnitude, const TfMatrix<double>& phase,
                         const StftConfig& config) {
  config.validate();
  if (!magnitude.same_shape(phase) || magnitude.bins() != config.bins())
    throw std::invalid_argument("istft: magnitude/phase shapes are inconsistent");

  const std::size_t frames = magnitude.frames();
  const std::size_t bins = magnitude.bins();
  const auto w_len = static_cast<std::size_t>(config.window_size);
  const auto hop = static_cast<std::size_t>(config.hop_size);
  const double scale = 1.0 / config.fft_size;
  const auto window = hann_window(config.window_size);

  const std::size_t length = config.signal_length(frames);
  std::vector<double> acc(length, 0.0);
  std::vector<double> norm(length, 0.0);
  detail::RealFft fft(static_cast<std::size_t>(config.fft_size));
  std::vector<std::complex<double>> spectrum(bins);
  std::vector<double> time(static_cast<std::size_t>(config.fft_size));

  for (std::size_t t = 0; t < frames; ++t) {
    auto mag = magnitude.frame(t);
    auto ph = phase.frame(t);
    for (std::size_t n = 0; n < bins; ++n) spectrum[n] = std::polar(mag[n], ph[n]);
    // The DC and Nyquist bins of a real signal carry no imaginary part.
    spectrum.front().imag(0.0);
    if (config.fft_size % 2 == 0) spectrum.back().imag(0.0);
    fft.inverse(spectrum, time);
    const std::size_t start = t * hop;
    for (std::size_t k = 0; k < w_len; ++k) {
      acc[start + k] += time[k] * scale * window[k];
      norm[start + k] += window[k] * window[k];
    }
  }

  // Near the track edges the window sum tends to zero and dividing by it
  // would amplify whatever a modified spectrogram puts there; the floor only
  // touches samples inside the first and last window.
  const double peak = frames > 0 ? *std::max_element(norm.begin(), norm.end()) : 0.0;
  const double floor = kIstftNormFloor * peak;
  std::vector<float> out(length, 0.0f);
  for (std::size_t i = 0; i < length; ++i) {
    if (norm[i] > 0.0) out[i] = static_cast<float>(acc[i] / std::max(norm[i], floor));
  }
  return out;
}

std::vector<float> istft(const Spectrogram& spec) {
  if (spec.magnitude.bins() != spec.config.bins())
    throw std::invalid_argument("istft: bin count does not match fft size");
  return istft(spec.magnitude, spec.phase, spec.config);
}

namespace {

constexpr int kResampleZeroCrossings = 16;
constexpr double kResampleKaiserBeta = 8.0;

double kaiser(double u) {
  if (std::abs(u) >= 1.0) return 0.0;
  return std::cyl_bessel_i(0.0, kResampleKaiserBeta * std::sqrt(1.0 - u * u)) /
         std::cyl_bessel_i(0.0, kResampleKaiserBeta);
}

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace

AudioBuffer resample(const AudioBuffer& audio, int target_rate) {
  if (target_rate <= 0 || audio.sample_rate() <= 0)
    throw std::invalid_argument("resample: sample rates must be positive");
  if (target_rate == audio.sample_rate()) return audio;

  const long long src = audio.sample_rate();
  const long long dst = target_rate;
  const long long g = std::gcd(src, dst);
  const long long up = dst / g;
  const long long down = src / g;
  const double cutoff = std::min(1.0, static_cast<double>(dst) / static_cast<double>(src));
  const long long half = static_cast<long long>(std::ceil(kResampleZeroCrossings / cutoff));
  const long long taps = 2 * half;

  // table[p][j] weights source sample i0 - half + 1 + j for output phase p.
  std::vector<double> table(static_cast<std::size_t>(up * taps));
  for (long long p = 0; p < up; ++p) {
    const double frac = static_cast<double>(p) / static_cast<double>(up);
    double sum = 0.0;
    for (long long j = 0; j < taps; ++j) {
      const double tau = static_cast<double>(j - half + 1) - frac;
      const double h = cutoff * sinc(cutoff * tau) * kaiser(tau / static_cast<double>(half));
      table[p * taps + j] = h;
      sum += h;
    }
    for (long long j = 0; j < taps; ++j) table[p * taps + j] /= sum;
  }

  const auto in_len = static_cast<long long>(audio.frames());
  const long long out_len = in_len * dst / src;
  AudioBuffer out(audio.channels(), static_cast<std::size_t>(out_len), target_rate);
  for (std::size_t c = 0; c < audio.channels(); ++c) {
    auto x = audio.channel(c);
    auto y = out.channel(c);
    for (long long n = 0; n < out_len; ++n) {
      const long long pos = n * down;
      const long long i0 = pos / up;
      const long long p = pos % up;
      const double* h = &table[p * taps];
      double acc = 0.0;
      const long long first = i0 - half + 1;
      const long long j_begin = std::max(0LL, -first);
      const long long j_end = std::min(taps, in_len - first);
      for (long long j = j_begin; j < j_end; ++j) acc += h[j] * x[first + j];
      y[n] = static_cast<float>(acc);
    }
  }
  return out;
}

std::vector<std::size_t> excerpt_origins(std::size_t frames, std::size_t hop_frames) {
  if (hop_frames < 1) throw std::invalid_argument("excerpts: hop must be >= 1");
  std::vector<std::size_t> origins;
  if (frames < kExcerptFrames) return origins;
  for (std::size_t o = 0; o + kExcerptFrames <= frames; o += hop_frames) origins.push_back(o);
  return origins;
}

std::vector<Excerpt> excerpts(const Spectrogram& spec, std::size_t hop_frames) {
  std::vector<Excerpt> out;
  for (std::size_t origin : excerpt_origins(spec.frames(), hop_frames)) {
    Excerpt e{origin, TfMatrix<float>(spec.bins(), kExcerptFrames)};
    copy_excerpt(spec.magnitude, origin, e.frames.data());
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace svsep
