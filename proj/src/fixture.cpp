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

#include "svsep/fixture.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "svsep/config.hpp"
#include "svsep/error.hpp"
#include "svsep/random.hpp"
#include "svsep/wav.hpp"

namespace svsep {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kGrid = 32768.0;

// Fade in and out over `ramp` samples inside [begin, end).
double gate(std::size_t i, std::size_t begin, std::size_t end, std::size_t ramp) {
  if (i < begin || i >= end) return 0.0;
  const double in = static_cast<double>(i - begin) / static_cast<double>(ramp);
  const double out = static_cast<double>(end - 1 - i) / static_cast<double>(ramp);
  return std::clamp(std::min(in, out), 0.0, 1.0);
}

void normalize_to_grid(std::vector<double>& x, double peak) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  const double g = m > 0.0 ? peak / m : 0.0;
  for (double& v : x) v = std::round(v * g * kGrid) / kGrid;
}

std::vector<double> make_voice(std::mt19937_64& rng, std::size_t n, int rate) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double sr = rate;

  // Syllables with short gaps, and one silent stretch of 1 s or more.
  const std::size_t silent_len = static_cast<std::size_t>((1.0 + 0.5 * u(rng)) * sr);
  const std::size_t silent_begin = static_cast<std::size_t>(u(rng) * static_cast<double>(n - silent_len));
  std::vector<double> env(n, 0.0);
  const std::size_t ramp = static_cast<std::size_t>(0.02 * sr);
  std::size_t t = static_cast<std::size_t>(0.05 * sr * u(rng));
  while (t < n) {
    const std::size_t len = static_cast<std::size_t>((0.25 + 0.35 * u(rng)) * sr);
    const std::size_t end = std::min(n, t + len);
    for (std::size_t i = t; i < end; ++i) env[i] = gate(i, t, end, ramp);
    t = end + static_cast<std::size_t>((0.05 + 0.2 * u(rng)) * sr);
  }
  for (std::size_t i = silent_begin; i < silent_begin + silent_len; ++i) env[i] = 0.0;

  constexpr std::array<double, 5> kHarmonics = {1.0, 0.6, 0.4, 0.25, 0.15};
  const double vib_phase = kTwoPi * u(rng);
  std::vector<double> x(n, 0.0);
  double phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double time = static_cast<double>(i) / sr;
    const double f0 = 220.0 * (1.0 + 0.02 * std::sin(kTwoPi * 6.0 * time + vib_phase));
    phase += kTwoPi * f0 / sr;
    double s = 0.0;
    for (std::size_t h = 0; h < kHarmonics.size(); ++h) s += kHarmonics[h] * std::sin(static_cast<double>(h + 1) * phase);
    x[i] = env[i] * s;
  }
  return x;
}

std::vector<double> make_accompaniment(std::mt19937_64& rng, std::size_t n, int rate) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g;
  const double sr = rate;

  // Lower-octave major triads: C, F or G.
  constexpr std::array<std::array<double, 3>, 3> kChords = {{{130.81, 164.81, 196.00},
                                                             {174.61, 220.00, 261.63},
                                                             {98.00, 123.47, 146.83}}};
  const auto& chord = kChords[static_cast<std::size_t>(u(rng) * 3.0) % 3];
  std::array<double, 3> phases{};
  for (auto& p : phases) p = kTwoPi * u(rng);

  std::vector<double> x(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double time = static_cast<double>(i) / sr;
    double s = 0.0;
    for (std::size_t k = 0; k < chord.size(); ++k)
      for (int h = 1; h <= 3; ++h) s += std::sin(kTwoPi * chord[k] * h * time + phases[k]) / h;
    x[i] = 0.35 * s * (0.8 + 0.2 * std::sin(kTwoPi * 0.5 * time));
  }

  // Decaying noise bursts, band-passed to roughly 1.5-4 kHz at 16 kHz.
  const std::size_t burst = static_cast<std::size_t>(0.08 * sr);
  std::size_t t = static_cast<std::size_t>(0.1 * sr * u(rng));
  while (t + burst < n) {
    double lp = 0.0, prev = 0.0, hp = 0.0;
    const double gain = 0.6 + 0.6 * u(rng);
    for (std::size_t i = 0; i < burst; ++i) {
      const double w = g(rng);
      hp = 0.7 * (hp + w - prev);
      prev = w;
      lp = 0.5 * lp + 0.5 * hp;
      x[t + i] += gain * lp * std::exp(-static_cast<double>(i) / (0.02 * sr));
    }
    t += static_cast<std::size_t>((0.3 + 0.4 * u(rng)) * sr);
  }
  return x;
}

std::vector<float> to_float(const std::vector<double>& x) { return {x.begin(), x.end()}; }

std::string clip_id(std::size_t i) {
  std::string digits = std::to_string(i);
  return "clip" + std::string(digits.size() < 3 ? 3 - digits.size() : 0, '0') + digits;
}

}  // namespace

Fixture make_fixture(std::uint64_t seed, double duration_seconds, int sample_rate) {
  if (!(duration_seconds >= 3.0)) throw std::invalid_argument("make_fixture: duration must be at least 3 s");
  if (sample_rate < 8000) throw std::invalid_argument("make_fixture: sample rate must be at least 8 kHz");
  const auto n = static_cast<std::size_t>(duration_seconds * sample_rate);
  auto voice_rng = make_stream(seed, "fixture", {0});
  auto accomp_rng = make_stream(seed, "fixture", {1});
  auto v = make_voice(voice_rng, n, sample_rate);
  auto s = make_accompaniment(accomp_rng, n, sample_rate);
  normalize_to_grid(v, 0.4);
  normalize_to_grid(s, 0.4);
  std::vector<double> m(n);
  for (std::size_t i = 0; i < n; ++i) m[i] = v[i] + s[i];
  return {seed, AudioBuffer::mono(to_float(v), sample_rate), AudioBuffer::mono(to_float(s), sample_rate),
          AudioBuffer::mono(to_float(m), sample_rate)};
}

Manifest write_fixture_set(const std::filesystem::path& dir, std::uint64_t seed, const FixtureSetOptions& options) {
  if (options.clips < 1) throw std::invalid_argument("write_fixture_set: need at least one clip");
  std::filesystem::create_directories(dir);
  Manifest m;
  m.base_dir = dir;
  auto clip_seeds = make_stream(seed, "fixture/clips");
  for (std::size_t i = 0; i < options.clips; ++i) {
    const std::string id = clip_id(i);
    const auto f = make_fixture(clip_seeds(), options.duration_seconds, options.sample_rate);
    write_wav(f.voice, dir / (id + "_voice.wav"));
    write_wav(f.accompaniment, dir / (id + "_accompaniment.wav"));
    write_wav(f.mixture, dir / (id + "_mixture.wav"));
    m.entries.push_back({id, id + "_voice.wav", id + "_accompaniment.wav", Split::kTrain, 1});
  }
  m = split_manifest(m, {}, seed);
  save_manifest(m, dir / "manifest.tsv");

  auto cfg = fixture_config();
  cfg.train.seed = seed;
  std::ofstream out(dir / "tiny.conf");
  out << format_config(cfg);
  if (!out) throw IoError("failed writing " + (dir / "tiny.conf").string());
  return m;
}

}  // namespace svsep
