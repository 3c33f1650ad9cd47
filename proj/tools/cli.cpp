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

#include "cli.hpp"

#include <CLI11.hpp>
#include <spdlog/fmt/fmt.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>

#include "png.hpp"
#include "svsep/checkpoint.hpp"
#include "svsep/config.hpp"
#include "svsep/error.hpp"
#include "svsep/evalx.hpp"
#include "svsep/fixture.hpp"
#include "svsep/inference.hpp"
#include "svsep/manifest.hpp"
#include "svsep/masks.hpp"
#include "svsep/parallel.hpp"
#include "svsep/training.hpp"
#include "svsep/wav.hpp"

namespace svsep::cli {

namespace {

namespace fs = std::filesystem;

struct FixturesArgs {
  std::uint64_t seed = 0;
  fs::path out;
  std::size_t clips = 10;
  double duration = 4.0;
  int rate = 16000;
};

struct TrainArgs {
  fs::path config;
  fs::path manifest;
  fs::path out;
  fs::path resume;
  fs::path history;
  std::vector<std::string> settings;
};

struct SeparateArgs {
  fs::path model;
  fs::path config;
  fs::path input;
  fs::path out_voice;
  fs::path out_accomp;
  fs::path dump_mask;
  std::optional<double> theta;
  bool pcm16 = false;
  fs::path manifest;
  std::string split = "test";
  fs::path out_dir;
  bool oracle = false;
  bool dump_masks = false;
};

struct EvaluateArgs {
  std::string protocol = "gnsdr";
  fs::path manifest;
  fs::path estimates;
  fs::path out;
  fs::path json;
  std::string split = "test";
  std::size_t filter_length = kDefaultFilterLength;
  bool quiet = false;
};

struct InspectArgs {
  fs::path mask;
  fs::path audio;
  fs::path png;
  fs::path config;
  std::size_t channel = 0;
  double range_db = 80.0;
};

fs::path with_suffix(const fs::path& p, const std::string& suffix) { return fs::path(p.string() + suffix); }

std::vector<ManifestEntry> entries_in(const Manifest& m, const std::string& split) {
  if (split == "all") return m.entries;
  return m.in_split(parse_split(split));
}

std::vector<ClipStems> load_split(const Manifest& m, Split split) {
  std::vector<ClipStems> clips;
  for (const auto& e : m.in_split(split)) clips.push_back(load_stems(m, e));
  if (clips.empty()) throw DataError("manifest has no " + std::string(to_string(split)) + " clips");
  return clips;
}

void write_history(const std::vector<EpochRecord>& history, const fs::path& path) {
  std::ofstream out(path);
  out << "epoch,train_loss,val_loss\n";
  for (const auto& h : history) out << fmt::format("{},{},{}\n", h.epoch, h.train_loss, h.val_loss);
  if (!out) throw IoError("failed writing " + path.string());
}

// ---------------------------------------------------------------- fixtures

int cmd_fixtures(const FixturesArgs& a) {
  const auto m = write_fixture_set(a.out, a.seed, {a.clips, a.duration, a.rate});
  spdlog::info("wrote {} fixture clips, manifest and tiny.conf to {}", m.entries.size(), a.out.string());
  return 0;
}

// ---------------------------------------------------------------- train

int cmd_train(const TrainArgs& a) {
  RunConfig cfg = a.config.empty() ? parse_config("") : load_config(a.config);
  for (const auto& s : a.settings) apply_setting(cfg, s);
  cfg.validate();
  const auto& tc = cfg.train;

  const auto manifest = load_manifest(a.manifest);
  const auto train_clips = load_split(manifest, Split::kTrain);
  const auto val_clips = load_split(manifest, Split::kValidation);
  spdlog::info("{} training and {} validation clips; {} worker threads", train_clips.size(), val_clips.size(),
               thread_count());

  std::optional<Checkpoint> resume;
  if (!a.resume.empty()) {
    resume = load_checkpoint(a.resume);
    if (!(resume->stft == cfg.stft) || !(resume->current.geometry() == cfg.geometry))
      throw InvalidState("resume: checkpoint STFT or geometry differs from the config");
  }
  const auto progress = with_suffix(a.out, ".partial");
  const auto save_progress = [&](const Checkpoint& c) { save_checkpoint(c, progress); };

  try {
    Model initial(cfg.geometry, tc.seed);
    spdlog::info("network: {} parameters", initial.parameter_count());
    const bool resume_train = resume && resume->stage == "train";
    if (tc.pretrain_epochs > 0 && !resume_train) {
      const auto voice_train =
          make_pretrain_instances(train_clips, cfg.stft, tc.hop_frames, tc.seed, tc.pretrain_target);
      const auto voice_val = make_pretrain_instances(val_clips, cfg.stft, tc.hop_frames, tc.seed, tc.pretrain_target);
      const auto pre = pretrain_autoencoder(initial, voice_train.instances, voice_val.instances, tc, cfg.stft,
                                            resume ? &*resume : nullptr, save_progress);
      write_history(pre.history, with_suffix(a.out, ".pretrain.csv"));
      spdlog::info("pretraining: best epoch {} (val loss {:.6f})", pre.best_epoch, pre.best_val_loss);
      initial = pre.best;
    }

    const auto train_set = make_instances(train_clips, cfg.stft, tc.hop_frames, tc.seed);
    const auto val_set = make_instances(val_clips, cfg.stft, tc.hop_frames, tc.seed);
    for (const auto& id : train_set.skipped) spdlog::warn("clip {}: shorter than one excerpt, skipped", id);
    for (const auto& id : val_set.skipped) spdlog::warn("clip {}: shorter than one excerpt, skipped", id);
    spdlog::info("{} training and {} validation excerpts", train_set.instances.size(), val_set.instances.size());

    auto cp = train(initial, train_set.instances, val_set.instances, tc, cfg.stft, resume_train ? &*resume : nullptr,
                    save_progress);
    spdlog::info("training: best epoch {} (val loss {:.6f})", cp.best_epoch, cp.best_val_loss);

    if (cfg.sweep) {
      const auto grid = default_threshold_grid();
      const auto sweep = sweep_threshold(cp.best, cfg.stft, val_clips, grid, cfg.filter_length);
      std::ofstream out(with_suffix(a.out, ".sweep.csv"));
      out << "theta,voice_gnsdr\n";
      for (std::size_t i = 0; i < grid.size(); ++i) out << fmt::format("{},{}\n", grid[i], sweep.gnsdr[i]);
      cp.theta = sweep.theta;
      spdlog::info("threshold sweep: theta {} (validation voice GNSDR {:.3f} dB)", sweep.theta,
                   *std::max_element(sweep.gnsdr.begin(), sweep.gnsdr.end()));
    } else {
      cp.theta = cfg.theta;
    }

    save_checkpoint(cp, a.out);
    write_history(cp.history, a.history.empty() ? with_suffix(a.out, ".history.csv") : a.history);
    fs::remove(progress);
    spdlog::info("wrote {}", a.out.string());
    return 0;
  } catch (const TrainingAborted& e) {
    const auto diag = with_suffix(a.out, ".aborted");
    save_checkpoint(e.checkpoint(), diag);
    spdlog::error("{}; last completed state written to {}", e.what(), diag.string());
    return 3;
  }
}

// ---------------------------------------------------------------- separate

void write_result(const SeparationResult& r, const fs::path& voice, const fs::path& accomp, bool pcm16) {
  const auto enc = pcm16 ? SampleEncoding::kPcm16 : SampleEncoding::kFloat32;
  const auto cv = write_wav(r.voice, voice, enc).clipped;
  const auto ca = write_wav(r.accompaniment, accomp, enc).clipped;
  if (cv + ca > 0) spdlog::warn("{} samples clipped while writing {}", cv + ca, voice.parent_path().string());
}

int cmd_separate(const SeparateArgs& a) {
  std::optional<Checkpoint> model;
  if (!a.model.empty()) model = load_checkpoint(a.model);
  if (!a.oracle && !model) throw std::invalid_argument("separate: --model is required unless --oracle is given");
  const StftConfig stft = model ? model->stft : (a.config.empty() ? parse_config("") : load_config(a.config)).stft;
  const double theta = a.theta.value_or(model ? model->theta : kDefaultTheta);

  if (a.manifest.empty()) {
    if (a.oracle) throw std::invalid_argument("separate: --oracle needs --manifest");
    if (a.input.empty() || a.out_voice.empty() || a.out_accomp.empty())
      throw std::invalid_argument("separate: --input, --out-voice and --out-accomp are required");
    const auto audio = load_wav(a.input);
    const auto r = separate(audio, model->best, theta, stft);
    write_result(r, a.out_voice, a.out_accomp, a.pcm16);
    if (!a.dump_mask.empty()) write_masks(a.dump_mask, r.voice_masks);
    spdlog::info("separated {} at theta {}", a.input.string(), theta);
    return 0;
  }

  if (a.out_dir.empty()) throw std::invalid_argument("separate: --out-dir is required with --manifest");
  fs::create_directories(a.out_dir);
  const auto manifest = load_manifest(a.manifest);
  const auto entries = entries_in(manifest, a.split);
  for (const auto& e : entries) {
    const auto stems = load_stems(manifest, e);
    const auto r = a.oracle ? separate_with_ibm(stems, stft)
                            : separate(mix(stems.voice, stems.accompaniment), model->best, theta, stft);
    write_result(r, a.out_dir / (e.clip_id + "_voice.wav"), a.out_dir / (e.clip_id + "_accompaniment.wav"), a.pcm16);
    if (a.dump_masks) write_masks(a.out_dir / (e.clip_id + ".svm"), r.voice_masks);
  }
  spdlog::info("separated {} clips into {}{}", entries.size(), a.out_dir.string(), a.oracle ? " (IBM oracle)" : "");
  return 0;
}

// ---------------------------------------------------------------- evaluate

AudioBuffer load_estimate(const fs::path& path, const std::string& clip_id) {
  try {
    return load_wav(path);
  } catch (const IoError& e) {
    throw DataError("clip " + clip_id + ": missing estimate: " + e.what());
  }
}

int cmd_evaluate(const EvaluateArgs& a) {
  if (a.protocol != "gnsdr" && a.protocol != "dsd100")
    throw std::invalid_argument("evaluate: protocol must be gnsdr or dsd100");
  const auto manifest = load_manifest(a.manifest);
  std::vector<SeparatedTrack> tracks;
  for (const auto& e : entries_in(manifest, a.split)) {
    auto stems = load_stems(manifest, e);
    auto v = load_estimate(a.estimates / (e.clip_id + "_voice.wav"), e.clip_id);
    auto s = load_estimate(a.estimates / (e.clip_id + "_accompaniment.wav"), e.clip_id);
    if (v.sample_rate() != s.sample_rate() || v.frames() != s.frames())
      throw DataError("clip " + e.clip_id + ": voice and accompaniment estimates differ in rate or length");
    // Estimates come at the model rate; references follow them.
    auto rv = resample(stems.voice, v.sample_rate());
    auto rs = resample(stems.accompaniment, v.sample_rate());
    if (rv.frames() != v.frames() || rv.channels() != v.channels())
      throw DataError("clip " + e.clip_id + ": estimate length or layout differs from the reference");
    tracks.push_back({e.clip_id, std::move(rv), std::move(rs), std::move(v), std::move(s)});
  }
  if (tracks.empty()) throw DataError("evaluate: no clips in split " + a.split);

  EvalReport report;
  if (a.protocol == "gnsdr") {
    report = evaluate_gnsdr(tracks, a.filter_length);
    if (!a.quiet)
      for (const auto& [source, value] : report.gnsdr) fmt::print("GNSDR {}: {:.4f} dB\n", source, value);
  } else {
    report = dsd100_protocol(tracks, {30.0, 15.0, a.filter_length});
    if (!a.quiet)
      for (const auto& [source, value] : report.median_sdr) fmt::print("median SDR {}: {:.4f} dB\n", source, value);
  }
  for (const auto& w : report.warnings) spdlog::warn("{}", w);

  if (a.out.extension() == ".json") write_report_json(report, a.out);
  else write_report_csv(report, a.out);
  if (!a.json.empty()) write_report_json(report, a.json);
  spdlog::info("wrote {}", a.out.string());
  return 0;
}

// ---------------------------------------------------------------- inspect

// Rows run from the highest bin at the top to bin 0 at the bottom.
template <typename Value>
std::vector<std::uint8_t> render(std::size_t bins, std::size_t frames, Value value) {
  std::vector<std::uint8_t> px(bins * frames);
  for (std::size_t r = 0; r < bins; ++r)
    for (std::size_t t = 0; t < frames; ++t)
      px[r * frames + t] = static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(value(bins - 1 - r, t), 0.0, 1.0)));
  return px;
}

int cmd_inspect(const InspectArgs& a) {
  if (a.mask.empty() == a.audio.empty()) throw std::invalid_argument("inspect: give exactly one of --mask or --audio");
  if (!a.mask.empty()) {
    const auto masks = read_masks(a.mask);
    if (a.channel >= masks.size()) throw std::invalid_argument("inspect: channel out of range");
    const auto& m = masks[a.channel];
    write_gray_png(a.png, render(m.bins(), m.frames(), [&](std::size_t k, std::size_t t) { return double(m(k, t)); }),
                   m.frames(), m.bins());
  } else {
    const StftConfig cfg = (a.config.empty() ? parse_config("") : load_config(a.config)).stft;
    const auto audio = resample(load_wav(a.audio), cfg.sample_rate);
    if (a.channel >= audio.channels()) throw std::invalid_argument("inspect: channel out of range");
    const auto spec = stft(audio.channel(a.channel), audio.sample_rate(), cfg);
    double top = -1e300;
    TfMatrix<double> db(spec.bins(), spec.frames());
    for (std::size_t t = 0; t < spec.frames(); ++t)
      for (std::size_t k = 0; k < spec.bins(); ++k) {
        db(k, t) = 20.0 * std::log10(spec.magnitude(k, t) + 1e-12);
        top = std::max(top, db(k, t));
      }
    write_gray_png(a.png, render(spec.bins(), spec.frames(),
                                 [&](std::size_t k, std::size_t t) { return 1.0 - (top - db(k, t)) / a.range_db; }),
                   spec.frames(), spec.bins());
  }
  spdlog::info("wrote {}", a.png.string());
  return 0;
}

void setup_logging(bool verbose, bool quiet) {
  static std::once_flag once;
  std::call_once(once, [] { spdlog::set_default_logger(spdlog::stderr_color_mt("svsep")); });
  spdlog::set_level(quiet ? spdlog::level::warn : verbose ? spdlog::level::debug : spdlog::level::info);
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Singing voice separation with a mask-predicting CNN"};
  app.require_subcommand(1);
  bool verbose = false, quiet = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  app.add_flag("-q,--quiet", quiet, "Warnings and errors only");

  FixturesArgs fx;
  auto* fixtures = app.add_subcommand("fixtures", "Write synthetic clips, a manifest and a small config");
  fixtures->add_option("--seed", fx.seed, "Seed")->required();
  fixtures->add_option("--out", fx.out, "Output directory")->required();
  fixtures->add_option("--clips", fx.clips, "Number of clips")->check(CLI::PositiveNumber);
  fixtures->add_option("--duration", fx.duration, "Clip length in seconds (>= 3)");
  fixtures->add_option("--rate", fx.rate, "Sample rate");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Pretrain, train and pick the mask threshold");
  train_cmd->add_option("--config", tr.config, "key=value config file")->check(CLI::ExistingFile);
  train_cmd->add_option("--manifest", tr.manifest, "Dataset manifest")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", tr.out, "Checkpoint to write")->required();
  train_cmd->add_option("--set", tr.settings, "Override a config key (key=value)");
  train_cmd->add_option("--resume", tr.resume, "Continue from a checkpoint")->check(CLI::ExistingFile);
  train_cmd->add_option("--history", tr.history, "Loss history CSV (default <out>.history.csv)");

  SeparateArgs sp;
  auto* separate_cmd = app.add_subcommand("separate", "Split a mixture into voice and accompaniment");
  separate_cmd->add_option("--model", sp.model, "Checkpoint")->check(CLI::ExistingFile);
  separate_cmd->add_option("--config", sp.config, "Config giving the STFT for --oracle without --model");
  separate_cmd->add_option("--input", sp.input, "Mixture WAV")->check(CLI::ExistingFile);
  separate_cmd->add_option("--theta", sp.theta, "Mask threshold (default: the checkpoint's)")
      ->check(CLI::Range(0.0, 1.0));
  separate_cmd->add_option("--out-voice", sp.out_voice, "Voice WAV");
  separate_cmd->add_option("--out-accomp", sp.out_accomp, "Accompaniment WAV");
  separate_cmd->add_option("--dump-mask", sp.dump_mask, "Write the soft voice masks");
  separate_cmd->add_flag("--pcm16", sp.pcm16, "Write 16-bit PCM instead of 32-bit float");
  separate_cmd->add_option("--manifest", sp.manifest, "Separate every clip of a split")->check(CLI::ExistingFile);
  separate_cmd->add_option("--split", sp.split, "train, validation, test or all");
  separate_cmd->add_option("--out-dir", sp.out_dir, "Directory for <clip>_voice.wav and <clip>_accompaniment.wav");
  separate_cmd->add_flag("--oracle", sp.oracle, "Use the ideal binary mask of the stems");
  separate_cmd->add_flag("--dump-masks", sp.dump_masks, "Also write <clip>.svm masks");

  EvaluateArgs ev;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score estimates against the manifest stems");
  evaluate_cmd->add_option("--protocol", ev.protocol, "gnsdr or dsd100")->check(CLI::IsMember({"gnsdr", "dsd100"}));
  evaluate_cmd->add_option("--manifest", ev.manifest, "Dataset manifest")->required()->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--estimates", ev.estimates, "Directory of estimates")
      ->required()
      ->check(CLI::ExistingDirectory);
  evaluate_cmd->add_option("--out", ev.out, "Report (.csv, or .json for the JSON form)")->required();
  evaluate_cmd->add_option("--json", ev.json, "Also write the JSON report here");
  evaluate_cmd->add_option("--split", ev.split, "train, validation, test or all");
  evaluate_cmd->add_option("--filter-length", ev.filter_length, "Distortion filter taps")->check(CLI::PositiveNumber);

  InspectArgs in;
  auto* inspect_cmd = app.add_subcommand("inspect", "Render a mask or a log spectrogram as PNG");
  inspect_cmd->add_option("--mask", in.mask, "Mask container")->check(CLI::ExistingFile);
  inspect_cmd->add_option("--audio", in.audio, "WAV file")->check(CLI::ExistingFile);
  inspect_cmd->add_option("--png", in.png, "Output image")->required();
  inspect_cmd->add_option("--config", in.config, "Config giving the STFT for --audio");
  inspect_cmd->add_option("--channel", in.channel, "Channel to render");
  inspect_cmd->add_option("--range", in.range_db, "Displayed dynamic range in dB for --audio");

  std::vector<const char*> argv;
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  setup_logging(verbose, quiet);
  ev.quiet = quiet;

  try {
    if (*fixtures) return cmd_fixtures(fx);
    if (*train_cmd) return cmd_train(tr);
    if (*separate_cmd) return cmd_separate(sp);
    if (*evaluate_cmd) return cmd_evaluate(ev);
    if (*inspect_cmd) return cmd_inspect(in);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 2;
}

}  // namespace svsep::cli
