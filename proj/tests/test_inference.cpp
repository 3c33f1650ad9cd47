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

#include <cmath>

#include "svsep/error.hpp"
#include "svsep/evalx.hpp"
#include "svsep/inference.hpp"
#include "test_support.hpp"

using namespace svsep;

namespace {

/// Value encodes (origin, frame within excerpt, bin).
class TaggingPredictor final : public MaskPredictor {
 public:
  void predict(const Tensor<float>& batch, std::span<const std::size_t> origins,
               std::span<float> out) const override {
    const std::size_t f = batch.shape[2];
    for (std::size_t b = 0; b < origins.size(); ++b)
      for (std::size_t k = 0; k < kExcerptFrames; ++k)
        for (std::size_t i = 0; i < f; ++i) out[(b * kExcerptFrames + k) * f + i] = tag(origins[b], k, i);
  }
  static float tag(std::size_t origin, std::size_t k, std::size_t bin) {
    return static_cast<float>(origin * 100 + k * 10 + bin % 10) / 4096.0f;
  }
};

Spectrogram spectrogram_with_frames(std::size_t frames) {
  const auto cfg = test::tiny_stft();
  std::vector<float> x(cfg.signal_length(frames));
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>(std::sin(0.3 * static_cast<double>(i)));
  auto s = stft(x, 8000, cfg);
  REQUIRE(s.frames() == frames);
  return s;
}

}  // namespace

TEST_CASE("nine frames: the single excerpt fills the whole mask") {
  const auto spec = spectrogram_with_frames(9);
  const auto m = estimate_soft_mask(TaggingPredictor(), spec);
  for (std::size_t j = 0; j < 9; ++j)
    for (std::size_t i = 0; i < spec.bins(); ++i) CHECK(m(i, j) == TaggingPredictor::tag(0, j, i));
}

TEST_CASE("eleven frames: middles inside, first and last excerpt at the edges") {
  const auto spec = spectrogram_with_frames(11);
  const auto m = estimate_soft_mask(TaggingPredictor(), spec, 2);
  for (std::size_t i = 0; i < spec.bins(); ++i) {
    for (std::size_t j = 0; j < 4; ++j) CHECK(m(i, j) == TaggingPredictor::tag(0, j, i));
    for (std::size_t j = 4; j < 7; ++j) CHECK(m(i, j) == TaggingPredictor::tag(j - 4, 4, i));
    for (std::size_t j = 7; j < 11; ++j) CHECK(m(i, j) == TaggingPredictor::tag(2, j - 2, i));
  }
  CHECK_THROWS_AS(estimate_soft_mask(TaggingPredictor(), spectrogram_with_frames(8)), std::invalid_argument);
}

TEST_CASE("mask column j depends only on frames j-4 .. j+4") {
  const Model model(test::tiny_geometry(), 2);
  auto spec = spectrogram_with_frames(60);
  const auto base = estimate_soft_mask(model, spec);
  for (std::size_t i = 0; i < spec.bins(); ++i) spec.magnitude(i, 30) += 5.0;
  const auto moved = estimate_soft_mask(model, spec);
  for (std::size_t j = 0; j < 60; ++j) {
    bool same = true;
    for (std::size_t i = 0; i < spec.bins(); ++i) same = same && base(i, j) == moved(i, j);
    if (j + 4 < 30 || j > 34) CHECK(same);
  }
  bool changed = false;
  for (std::size_t j = 26; j <= 34; ++j)
    for (std::size_t i = 0; i < spec.bins(); ++i) changed = changed || base(i, j) != moved(i, j);
  CHECK(changed);
}

TEST_CASE("constant mask scales the mixture") {
  const auto cfg = test::tiny_stft();
  const auto clip = test::synthetic_stems("k", 1600, 1, 3);
  const auto mixture = mix(clip.voice, clip.accompaniment);
  const auto r = separate(mixture, ConstantPredictor(0.7f), 0.35, cfg);
  CHECK(r.theta == 0.35);
  CHECK(r.voice.frames() == mixture.frames());
  const auto full = istft(stft(mixture.channel(0), 8000, cfg));
  for (std::size_t t = 0; t < full.size(); ++t) {
    CHECK(r.voice.channel(0)[t] == doctest::Approx(0.7 * full[t]).epsilon(1e-5).scale(1.0));
    CHECK(r.accompaniment.channel(0)[t] == doctest::Approx(0.3 * full[t]).epsilon(1e-5).scale(1.0));
  }
  // Interior samples reproduce the mixture itself.
  for (std::size_t t = 32; t + 32 < full.size(); ++t)
    CHECK(r.voice.channel(0)[t] + r.accompaniment.channel(0)[t] ==
          doctest::Approx(mixture.channel(0)[t]).epsilon(1e-5).scale(1.0));
  // A mask below theta is zeroed: everything goes to the accompaniment.
  const auto low = separate(mixture, ConstantPredictor(0.2f), 0.35, cfg);
  for (float v : low.voice.channel(0)) CHECK(v == 0.0f);
}

TEST_CASE("theta 0 outputs sum to the resynthesized mixture") {
  const auto cfg = test::tiny_stft();
  const Model model(test::tiny_geometry(), 4);
  const auto clip = test::synthetic_stems("z", 1600, 1, 8);
  const auto mixture = mix(clip.voice, clip.accompaniment);
  const auto r = separate(mixture, model, 0.0, cfg);
  const auto full = istft(stft(mixture.channel(0), 8000, cfg));
  for (std::size_t t = 0; t < full.size(); ++t)
    CHECK(r.voice.channel(0)[t] + r.accompaniment.channel(0)[t] == doctest::Approx(full[t]).epsilon(1e-6).scale(1.0));
  for (std::size_t t = full.size(); t < mixture.frames(); ++t) CHECK(r.voice.channel(0)[t] == 0.0f);
}

TEST_CASE("stereo channels are separated independently") {
  const auto cfg = test::tiny_stft();
  const Model model(test::tiny_geometry(), 4);
  const auto a = test::synthetic_stems("s", 1200, 2, 1);
  auto mixture = mix(a.voice, a.accompaniment);
  const auto r1 = separate(mixture, model, 0.35, cfg);
  for (auto& v : mixture.channel(1)) v *= -0.5f;
  const auto r2 = separate(mixture, model, 0.35, cfg);
  CHECK(std::equal(r1.voice.channel(0).begin(), r1.voice.channel(0).end(), r2.voice.channel(0).begin()));
  CHECK(r1.voice_masks[0] == r2.voice_masks[0]);
  CHECK_FALSE(r1.voice_masks[1] == r2.voice_masks[1]);

  // Per-channel runs reproduce the stereo result.
  for (std::size_t c = 0; c < 2; ++c) {
    const auto mono = separate(mixture.extract_channel(c), model, 0.35, cfg);
    CHECK(std::equal(mono.voice.channel(0).begin(), mono.voice.channel(0).end(), r2.voice.channel(c).begin()));
    CHECK(std::equal(mono.accompaniment.channel(0).begin(), mono.accompaniment.channel(0).end(),
                     r2.accompaniment.channel(c).begin()));
    CHECK(mono.voice_masks[0] == r2.voice_masks[c]);
  }
}

TEST_CASE("input validation") {
  const auto cfg = test::tiny_stft();
  const ConstantPredictor p(0.5f);
  CHECK_THROWS_AS(separate(AudioBuffer(3, 1000, 8000), p, 0.35, cfg), UnsupportedFormat);
  CHECK_THROWS_AS(separate(AudioBuffer(1, 20, 8000), p, 0.35, cfg), std::invalid_argument);
  CHECK_THROWS_AS(separate(AudioBuffer(1, 1000, 8000), p, 1.5, cfg), std::invalid_argument);
  CHECK_THROWS_AS(ConstantPredictor(1.2f), std::invalid_argument);
  // Other rates are resampled to the model rate first.
  const auto r = separate(AudioBuffer(1, 2000, 16000), p, 0.35, cfg);
  CHECK(r.voice.sample_rate() == 8000);
  CHECK(r.voice.frames() == 1000u);
}

TEST_CASE("IBM oracle separation beats the mixture") {
  const auto cfg = test::tiny_stft();
  const auto clip = test::synthetic_stems("o", 4000, 1, 2);
  const auto r = separate_with_ibm(clip, cfg);
  const auto mixture = mix(clip.voice, clip.accompaniment);
  const auto d = [](std::span<const float> x) { return std::vector<double>(x.begin(), x.end()); };
  CHECK(nsdr(d(r.voice.channel(0)), d(clip.voice.channel(0)), d(mixture.channel(0)), 16) > 3.0);
}
