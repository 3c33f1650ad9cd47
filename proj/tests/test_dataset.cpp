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
#include <filesystem>
#include <fstream>

#include "svsep/checkpoint.hpp"
#include "svsep/config.hpp"
#include "svsep/error.hpp"
#include "svsep/evalx.hpp"
#include "svsep/fixture.hpp"
#include "svsep/inference.hpp"
#include "svsep/wav.hpp"
#include "test_support.hpp"

using namespace svsep;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("svsep_dataset_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<double> as_double(std::span<const float> x) { return {x.begin(), x.end()}; }

}  // namespace

// Frozen from the first oracle run on seeds 1..4 (9.75 to 13.18 dB).
constexpr double kFixtureOracleNsdrBound = 9.0;

TEST_CASE("fixture construction") {
  const auto a = make_fixture(1, 4.0);
  const auto b = make_fixture(1, 4.0);
  const auto c = make_fixture(2, 4.0);
  CHECK(a.voice == b.voice);
  CHECK(a.accompaniment == b.accompaniment);
  CHECK_FALSE(a.voice == c.voice);
  REQUIRE(a.voice.frames() == 64000u);
  CHECK(a.voice.sample_rate() == 16000);

  std::size_t longest_silence = 0, run = 0;
  for (std::size_t i = 0; i < a.voice.frames(); ++i) {
    const float v = a.voice.channel(0)[i], s = a.accompaniment.channel(0)[i];
    CHECK(a.mixture.channel(0)[i] - v - s == 0.0f);
    CHECK(std::round(v * 32768.0f) == v * 32768.0f);
    run = v == 0.0f ? run + 1 : 0;
    longest_silence = std::max(longest_silence, run);
  }
  CHECK(longest_silence >= 16000u);
  CHECK_THROWS_AS(make_fixture(1, 2.9), std::invalid_argument);
}

TEST_CASE("fixture voice energy sits at the 220 Hz harmonics") {
  const auto f = make_fixture(3, 4.0);
  const StftConfig cfg{1024, 256, 4096, 16000};
  const auto spec = stft(f.voice.channel(0), 16000, cfg);
  std::vector<double> energy(spec.bins(), 0.0);
  for (std::size_t t = 0; t < spec.frames(); ++t)
    for (std::size_t k = 0; k < spec.bins(); ++k) energy[k] += spec.magnitude(k, t) * spec.magnitude(k, t);
  const auto peak = static_cast<std::size_t>(std::max_element(energy.begin(), energy.end()) - energy.begin());
  CHECK(std::abs(peak * 16000.0 / 4096.0 - 220.0) < 10.0);
}

TEST_CASE("IBM oracle separation of fixtures clears the regression bound") {
  const auto cfg = fixture_config().stft;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto f = make_fixture(seed, 4.0);
    const auto r = separate_with_ibm({"f", f.voice, f.accompaniment}, cfg);
    const auto v = resample(f.voice, cfg.sample_rate);
    const auto m = resample(f.mixture, cfg.sample_rate);
    const double value = nsdr(as_double(r.voice.channel(0)), as_double(v.channel(0)), as_double(m.channel(0)), 512);
    INFO("seed " << seed << " oracle NSDR " << value);
    CHECK(value >= kFixtureOracleNsdrBound);
  }
}

TEST_CASE("fixture set on disk") {
  const auto dir = scratch("set");
  const auto m = write_fixture_set(dir, 5, {5, 3.0, 16000});
  CHECK(m.entries.size() == 5u);
  const auto loaded = load_manifest(dir / "manifest.tsv");
  CHECK(loaded.entries == m.entries);
  CHECK_NOTHROW(validate_manifest(loaded));
  const auto cfg = load_config(dir / "tiny.conf");
  CHECK(cfg.train.seed == 5u);
  CHECK_NOTHROW(cfg.validate());
  const auto mixture = load_wav(dir / (m.entries[0].clip_id + "_mixture.wav"));
  const auto stems = load_stems(loaded, loaded.entries[0]);
  for (std::size_t i = 0; i < mixture.frames(); ++i)
    CHECK(mixture.channel(0)[i] == stems.voice.channel(0)[i] + stems.accompaniment.channel(0)[i]);
}

TEST_CASE("config parsing") {
  const auto base = fixture_config();
  const auto text = format_config(base);
  const auto again = parse_config(text);
  CHECK(format_config(again) == text);
  CHECK(again.geometry == base.geometry);
  CHECK(again.stft == base.stft);
  CHECK(again.train.adam == base.train.adam);

  auto c = parse_config("# comment\nepochs = 7   # trailing\nconv_stages = 1,2;3\nhidden=5\nfft_size=1024\n");
  CHECK(c.train.epochs == 7u);
  CHECK(c.geometry.conv_stages == std::vector<std::vector<std::size_t>>{{1, 2}, {3}});
  CHECK(c.geometry.hidden == std::vector<std::size_t>{5});
  CHECK(c.geometry.bins == 513u);
  apply_setting(c, "learning_rate=1e-4");
  CHECK(c.train.adam.learning_rate == 1e-4);

  const auto full = parse_config("");
  CHECK(full.geometry == NetworkGeometry::full());
  CHECK(full.train.batch_size == 171u);
  CHECK(full.theta == kDefaultTheta);

  try {
    parse_config("epochs = 3\nbogus = 1\n", "x.conf");
    FAIL("expected invalid_argument");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("x.conf:2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config("epochs = three"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("sweep = maybe"), std::invalid_argument);
  CHECK_THROWS_AS(load_config("/nonexistent/svsep.conf"), IoError);
}

TEST_CASE("checkpoint round trip is exact and resumable") {
  const auto dir = scratch("ckpt");
  const auto cfg = test::tiny_stft();
  std::vector<ClipStems> clips = {test::synthetic_stems("a", 1200, 1, 1), test::synthetic_stems("b", 1200, 1, 2)};
  const auto set = make_instances(clips, cfg, 4, 1).instances;
  TrainConfig tc;
  tc.batch_size = 5;
  tc.epochs = 2;
  tc.seed = 3;
  const Model initial(test::tiny_geometry(), 9);

  Checkpoint at_zero;
  const auto cp = train(initial, set, set, tc, cfg, nullptr, [&](const Checkpoint& c) {
    if (c.epoch == 0) at_zero = c;
  });
  for (const Checkpoint* c : {static_cast<const Checkpoint*>(&at_zero), &cp}) {
    save_checkpoint(*c, dir / "c.ckpt");
    CHECK(load_checkpoint(dir / "c.ckpt") == *c);
  }

  save_checkpoint(cp, dir / "c.ckpt");
  auto longer = tc;
  longer.epochs = 3;
  const auto resumed = train(initial, set, set, longer, cfg, &cp);
  const auto reloaded = load_checkpoint(dir / "c.ckpt");
  CHECK(train(initial, set, set, longer, cfg, &reloaded) == resumed);
  CHECK(train(initial, set, set, longer, cfg) == resumed);

  // Damaged files.
  std::ifstream in(dir / "c.ckpt", std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), {});
  auto write = [&](const std::string& b) {
    std::ofstream(dir / "bad.ckpt", std::ios::binary) << b;
    return dir / "bad.ckpt";
  };
  CHECK_THROWS_AS(load_checkpoint(write(bytes.substr(0, bytes.size() - 3))), FormatError);
  CHECK_THROWS_AS(load_checkpoint(write("XXXXXXXX" + bytes.substr(8))), FormatError);
  std::string v2 = bytes;
  v2[8] = 2;
  CHECK_THROWS_AS(load_checkpoint(write(v2)), UnsupportedFormat);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), IoError);
}
