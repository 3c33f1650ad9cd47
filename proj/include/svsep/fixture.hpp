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

#include <cstdint>
#include <filesystem>

#include "svsep/audio.hpp"
#include "svsep/manifest.hpp"

namespace svsep {

/// Synthetic stand-in for a vocal recording. Both stems sit on the 2^-15
/// grid, so the mixture is their exact sum and survives PCM16 unchanged.
struct Fixture {
  std::uint64_t seed = 0;
  AudioBuffer voice;
  AudioBuffer accompaniment;
  AudioBuffer mixture;
};

/// Voice: 220 Hz tone with 5 harmonics, 6 Hz vibrato and gated syllables,
/// silent for one seeded stretch of at least a second. Accompaniment: a
/// 3-note chord plus band-passed noise bursts. Mono, deterministic per
/// seed. Throws std::invalid_argument for durations under 3 s.
Fixture make_fixture(std::uint64_t seed, double duration_seconds, int sample_rate = 16000);

struct FixtureSetOptions {
  std::size_t clips = 10;
  double duration_seconds = 4.0;
  int sample_rate = 16000;
};

/// Writes <id>_voice.wav, <id>_accompaniment.wav and <id>_mixture.wav per
/// clip, a 60/20/20 manifest.tsv and a tiny.conf training config sized for
/// the fixtures. Returns the manifest.
Manifest write_fixture_set(const std::filesystem::path& dir, std::uint64_t seed,
                           const FixtureSetOptions& options = {});

}  // namespace svsep
