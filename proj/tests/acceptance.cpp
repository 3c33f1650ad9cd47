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

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "svsep/checkpoint.hpp"
#include "svsep/config.hpp"
#include "svsep/evalx.hpp"
#include "svsep/fixture.hpp"
#include "svsep/inference.hpp"
#include "svsep/manifest.hpp"
#include "svsep/masks.hpp"
#include "svsep/network.hpp"
#include "svsep/wav.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace svsep;

namespace {

// Tolerances and budgets.
constexpr std::size_t kFullParameters = 19'489'049;
const std::vector<std::size_t> kFullLayerParameters = {1184, 18448, 36928, 73760, 8849408, 1049088, 9460233};
constexpr double kAccountingSeconds = 1.0;
constexpr std::size_t kRoundTripSignals = 100;
constexpr double kRoundTripTolerance = 1e-6;
constexpr double kRoundTripSeconds = 30.0;
constexpr std::size_t kGradientSamples = 1000;
constexpr double kGradientTolerance = 1e-4;
constexpr double kGradientSeconds = 120.0;
constexpr double kLossFloor = 0.0980;
constexpr double kLossFloorTolerance = 1e-4;
constexpr std::size_t kMaxFixtureEpochs = 200;
constexpr double kPipelineSeconds = 600.0;
constexpr double kComplementTolerance = 1e-6;
constexpr double kCompletenessTolerance = 1e-8;
constexpr double kBruteForceTolerance = 1e-8;
constexpr std::size_t kBssCases = 20;
constexpr std::size_t kMaxBruteForceTaps = 8;
constexpr double kGnsdrMeanTolerance = 1e-12;
constexpr std::uint64_t kFixtureSeed = 7;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("AC%-2d %s  %s: %s\n", id, o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

std::vector<double> as_double(std::span<const float> x) { return {x.begin(), x.end()}; }

double relative_norm(std::span<const float> a, std::span<const float> b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    num += d * d;
    den += static_cast<double>(b[i]) * b[i];
  }
  return std::sqrt(num / den);
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), {}};
}

// ------------------------------------------------------------ fixture pipeline

struct PipelineRun {
  fs::path dir;
  bool ok = false;
  std::string failure;
  double seconds = 0.0;
  std::size_t epochs = 0;
};

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), {"svsep", "-q"});
  return cli::run(args);
}

PipelineRun run_pipeline(const fs::path& dir) {
  PipelineRun r{dir};
  fs::remove_all(dir);
  const auto start = Clock::now();
  const auto data = (dir / "data").string();
  const auto manifest = data + "/manifest.tsv";
  const auto model = (dir / "model.ckpt").string();
  const std::vector<std::pair<std::string, std::vector<std::string>>> steps = {
      {"fixtures", {"fixtures", "--seed", std::to_string(kFixtureSeed), "--out", data}},
      {"train", {"train", "--config", data + "/tiny.conf", "--manifest", manifest, "--out", model}},
      {"separate", {"separate", "--model", model, "--manifest", manifest, "--split", "test", "--out-dir",
                    (dir / "estimates").string(), "--dump-masks"}},
      {"evaluate", {"evaluate", "--protocol", "gnsdr", "--manifest", manifest, "--estimates",
                    (dir / "estimates").string(), "--out", (dir / "report.csv").string(), "--json",
                    (dir / "report.json").string()}},
      {"oracle separate", {"separate", "--oracle", "--config", data + "/tiny.conf", "--manifest", manifest, "--split",
                           "test", "--out-dir", (dir / "oracle").string()}},
      {"oracle evaluate", {"evaluate", "--protocol", "gnsdr", "--manifest", manifest, "--estimates",
                           (dir / "oracle").string(), "--out", (dir / "oracle.csv").string(), "--json",
                           (dir / "oracle.json").string()}},
  };
  for (const auto& [name, args] : steps) {
    if (run_cli(args) != 0) {
      r.failure = name + " step failed";
      return r;
    }
  }
  r.seconds = seconds_since(start);
  r.epochs = load_checkpoint(model).epoch;
  r.ok = true;
  return r;
}

struct ClipRow {
  std::string clip_id;
  std::string source;
  double nsdr = 0.0;
};

std::vector<ClipRow> read_rows(const fs::path& csv) {
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  std::vector<ClipRow> rows;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() < 4) throw std::runtime_error("short row in " + csv.string());
    rows.push_back({f[0], f[1], f[3].empty() ? std::nan("") : std::stod(f[3])});
  }
  return rows;
}

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() / "svsep_acceptance";
  fs::create_directories(work);
  PipelineRun first;

  report(1, "parameter accounting", [] {
    const auto start = Clock::now();
    const auto model = build_model(0);
    const double t = seconds_since(start);
    std::vector<std::size_t> counts;
    for (std::size_t l = 0; l < model.layers().size(); ++l)
      if (model.layers()[l].has_params()) counts.push_back(model.layer_parameter_count(l));
    const bool ok = model.parameter_count() == kFullParameters && counts == kFullLayerParameters &&
                    t < kAccountingSeconds;
    return Outcome{ok, fmt("%zu parameters, %zu parameterized layers match, %.3f s", model.parameter_count(),
                           counts.size(), t)};
  });

  report(2, "STFT/iSTFT round trip", [] {
    const auto start = Clock::now();
    const StftConfig cfg;
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    double worst = 0.0;
    for (std::size_t s = 0; s < kRoundTripSignals; ++s) {
      std::vector<float> x(3 * static_cast<std::size_t>(cfg.sample_rate));
      for (auto& v : x) v = u(rng);
      const auto y = istft(stft(x, cfg.sample_rate, cfg));
      const auto w = static_cast<std::size_t>(cfg.window_size);
      for (std::size_t i = w; i + w < y.size(); ++i) worst = std::max(worst, std::abs(static_cast<double>(y[i]) - x[i]));
    }
    const double t = seconds_since(start);
    return Outcome{worst < kRoundTripTolerance && t < kRoundTripSeconds,
                   fmt("max interior error %.3g over %zu signals, %.1f s", worst, kRoundTripSignals, t)};
  });

  report(3, "finite-difference gradient check", [] {
    const auto start = Clock::now();
    const auto r = test::gradient_check(kGradientSamples, 3);
    const double t = seconds_since(start);
    std::map<LayerKind, int> kinds;
    for (const auto& l : build_layers(test::tiny_geometry())) ++kinds[l.kind];
    const bool ok = r.sampled >= kGradientSamples && r.layers_covered == r.layers_with_params && kinds.size() == 5 &&
                    r.max_relative_error < kGradientTolerance && t < kGradientSeconds;
    return Outcome{ok, fmt("max relative error %.3g over %zu parameters (%zu redrawn at kinks), %zu/%zu layers, "
                           "%zu layer kinds, %.1f s",
                           r.max_relative_error, r.sampled, r.straddled, r.layers_covered, r.layers_with_params,
                           kinds.size(), t)};
  });

  report(4, "cross entropy floor", [] {
    const auto target = test::random_target<double>(test::tiny_geometry(), 4, 4);
    const double loss = cross_entropy<double>(target.data, target.data);
    return Outcome{std::abs(loss - kLossFloor) <= kLossFloorTolerance, fmt("%.6f", loss)};
  });

  report(5, "IBM and NSDR identities", [] {
    std::size_t cases = 0;
    bool ok = true;
    const double levels[] = {0.0, 1.0, 2.0};
    for (int code = 0; code < 81 * 81; ++code) {
      TfMatrix<double> v(2, 2), s(2, 2);
      int c = code;
      for (std::size_t i = 0; i < 4; ++i, c /= 3) v.data()[i] = levels[c % 3];
      for (std::size_t i = 0; i < 4; ++i, c /= 3) s.data()[i] = levels[c % 3];
      const auto b = ideal_binary_mask(v, s);
      const auto nb = complement(b);
      for (std::size_t i = 0; i < 4; ++i) {
        ok = ok && b.bits.data()[i] == (v.data()[i] > s.data()[i] ? 1 : 0);
        ok = ok && b.bits.data()[i] + nb.bits.data()[i] == 1;
      }
      ++cases;
    }
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const auto f = make_fixture(seed, 3.0);
      const auto m = as_double(f.mixture.channel(0));
      const double n = nsdr(m, as_double(f.voice.channel(0)), m);
      worst = std::max(worst, std::abs(n));
      ok = ok && n == 0.0;
    }
    return Outcome{ok, fmt("%zu exhaustive 2x2 cases; max |NSDR(mixture)| = %g on 3 fixtures", cases, worst)};
  });

  report(6, "end-to-end fixture pipeline", [&] {
    first = run_pipeline(work / "run1");
    if (!first.ok) return Outcome{false, first.failure};
    const auto learned = read_rows(first.dir / "report.csv");
    const auto oracle = nlohmann::json::parse(read_bytes(first.dir / "oracle.json"));
    const auto trained = nlohmann::json::parse(read_bytes(first.dir / "report.json"));
    const double g_learned = trained.at("gnsdr").at("voice").get<double>();
    const double g_oracle = oracle.at("gnsdr").at("voice").get<double>();
    bool all_positive = true;
    std::size_t clips = 0;
    for (const auto& row : learned)
      if (row.source == "voice") {
        ++clips;
        all_positive = all_positive && row.nsdr > 0.0;
      }
    const bool ok = clips > 0 && all_positive && g_learned > 0.0 && g_oracle > g_learned &&
                    first.epochs <= kMaxFixtureEpochs && first.seconds < kPipelineSeconds;
    return Outcome{ok, fmt("%zu test clips, learned voice GNSDR %.3f dB (every clip > 0: %s), IBM oracle %.3f dB, "
                           "%zu epochs, %.0f s",
                           clips, g_learned, all_positive ? "yes" : "no", g_oracle, first.epochs, first.seconds)};
  });

  report(7, "mask complementarity at theta 0", [&] {
    const auto cfg = fixture_config();
    const Model model = first.ok ? load_checkpoint(first.dir / "model.ckpt").best : Model(cfg.geometry, 1);
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const auto f = make_fixture(seed, 3.0);
      const auto r = separate(f.mixture, model, 0.0, cfg.stft);
      const auto prepared = prepare_input(f.mixture, cfg.stft);
      const auto reference = istft(stft(prepared.channel(0), prepared.sample_rate(), cfg.stft));
      std::vector<float> sum(reference.size());
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = r.voice.channel(0)[i] + r.accompaniment.channel(0)[i];
      worst = std::max(worst, relative_norm(sum, reference));
    }
    return Outcome{worst < kComplementTolerance,
                   fmt("max relative norm %.3g on 3 fixtures (%s model)", worst, first.ok ? "trained" : "untrained")};
  });

  report(8, "BSS decomposition", [] {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g;
    auto gaussian = [&](std::size_t n) {
      std::vector<double> x(n);
      for (auto& v : x) v = g(rng);
      return x;
    };
    double worst_sum = 0.0, worst_oracle = 0.0;
    for (std::size_t c = 0; c < kBssCases; ++c) {
      const std::size_t n = 100 + 23 * c;
      const std::size_t taps = 1 + c % kMaxBruteForceTaps;
      const std::vector<std::vector<double>> sources = {gaussian(n), gaussian(n), gaussian(n)};
      auto est = gaussian(n);
      for (std::size_t i = 0; i < n; ++i) est[i] += sources[0][i] + 0.5 * sources[1][i];
      const auto d = BssProjector(sources, taps).decompose(est, 0);
      const auto o = test::brute_force_projection(est, sources, taps);
      double e_sum = 0.0, e_or = 0.0, norm_est = 0.0, norm_o = 0.0;
      for (std::size_t t = 0; t < d.s_target.size(); ++t) {
        const double x = t < n ? est[t] : 0.0;
        e_sum = std::max(e_sum, std::abs(d.s_target[t] + d.e_interf[t] + d.e_artif[t] - x));
        norm_est = std::max(norm_est, std::abs(x));
        e_or = std::max({e_or, std::abs(d.s_target[t] - o.s_target[t]), std::abs(d.e_interf[t] - o.e_interf[t]),
                         std::abs(d.e_artif[t] - o.e_artif[t])});
        norm_o = std::max(norm_o, std::abs(o.s_target[t]));
      }
      worst_sum = std::max(worst_sum, e_sum / norm_est);
      worst_oracle = std::max(worst_oracle, e_or / norm_o);
    }
    return Outcome{worst_sum < kCompletenessTolerance && worst_oracle < kBruteForceTolerance,
                   fmt("completeness %.3g, brute-force deviation %.3g (relative, %zu cases, L <= %zu)", worst_sum,
                       worst_oracle, kBssCases, kMaxBruteForceTaps)};
  });

  report(9, "protocol arithmetic", [] {
    const auto counts = split_counts(252, {});
    const auto starts = dsd100_clip_starts(250 * 44100, 44100);
    std::vector<NsdrClip> clips;
    std::vector<double> individual;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const auto f = make_fixture(seed, 3.0, 8000);
      std::vector<double> est(f.mixture.frames());
      for (std::size_t i = 0; i < est.size(); ++i) est[i] = f.voice.channel(0)[i] + 0.3 * f.accompaniment.channel(0)[i];
      clips.push_back({est, as_double(f.voice.channel(0)), as_double(f.mixture.channel(0))});
      individual.push_back(nsdr(clips.back().estimate, clips.back().truth, clips.back().mixture, 64));
    }
    double mean = 0.0;
    for (double v : individual) mean += v;
    mean /= static_cast<double>(individual.size());
    const double g = gnsdr(std::span<const NsdrClip>(clips), 64);
    const bool ok = counts == std::array<std::size_t, 3>{152, 50, 50} && starts.size() == 15 &&
                    std::abs(g - mean) <= kGnsdrMeanTolerance * std::max(1.0, std::abs(mean));
    return Outcome{ok, fmt("252 -> %zu/%zu/%zu, 250 s -> %zu clips, GNSDR %.6f vs mean %.6f", counts[0], counts[1],
                           counts[2], starts.size(), g, mean)};
  });

  report(10, "determinism", [&] {
    if (!first.ok) return Outcome{false, "first pipeline run failed"};
    const auto second = run_pipeline(work / "run2");
    if (!second.ok) return Outcome{false, second.failure};
    std::vector<fs::path> artifacts = {"model.ckpt", "model.ckpt.history.csv", "model.ckpt.pretrain.csv",
                                       "model.ckpt.sweep.csv", "report.csv", "report.json", "oracle.json"};
    for (const auto& e : fs::directory_iterator(first.dir / "estimates"))
      artifacts.push_back(fs::path("estimates") / e.path().filename());
    std::size_t masks = 0;
    std::string differ;
    for (const auto& a : artifacts) {
      if (a.extension() == ".svm") ++masks;
      if (read_bytes(first.dir / a) != read_bytes(second.dir / a)) differ += " " + a.string();
    }
    return Outcome{differ.empty() && masks > 0,
                   differ.empty() ? fmt("%zu artifacts bit-identical (%zu mask files)", artifacts.size(), masks)
                                  : "differ:" + differ};
  });

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
