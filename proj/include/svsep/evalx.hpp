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
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "svsep/audio.hpp"

namespace svsep {

/// Ratios beyond +-300 dB, including a zero denominator, are reported at
/// the bound and flagged.
inline constexpr double kSdrSentinel = 300.0;
inline constexpr std::size_t kDefaultFilterLength = 512;

/// Estimate = s_target + e_interf + e_artif. All components have length
/// n + L - 1 (the estimate is zero-padded). `degenerate` is set when the
/// true source has no energy; the ratios are then NaN.
struct BssDecomposition {
  std::vector<double> s_target;
  std::vector<double> e_interf;
  std::vector<double> e_artif;
  std::vector<double> e_spatial;  // s_target minus the unfiltered true source
  std::vector<double> true_source;
  std::size_t filter_length = 0;
  bool degenerate = false;
};

/// Least-squares projections onto time-invariant L-tap filtered versions of
/// a fixed set of reference sources. The Gram matrices are factored once,
/// so many estimates against the same references are cheap.
class BssProjector {
 public:
  /// Sources must share one non-zero length. Throws std::invalid_argument
  /// otherwise or for L < 1.
  BssProjector(std::vector<std::vector<double>> sources, std::size_t filter_length);
  ~BssProjector();
  BssProjector(BssProjector&&) noexcept;
  BssProjector& operator=(BssProjector&&) noexcept;

  std::size_t source_count() const noexcept;
  std::size_t length() const noexcept;

  /// Decomposition of `estimate` (same length as the sources) with source
  /// `target` as the true source and all others as interferers.
  BssDecomposition decompose(std::span<const double> estimate, std::size_t target) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

BssDecomposition decompose(std::span<const double> estimate, std::span<const double> true_source,
                           const std::vector<std::vector<double>>& interferers,
                           std::size_t filter_length = kDefaultFilterLength);

/// 10 log10 of an energy ratio, clamped to +-kSdrSentinel; NaN propagates.
double ratio_db(double numerator_energy, double denominator_energy);

double sdr(const BssDecomposition& d);  // |s_target|^2 / |e_interf + e_artif|^2
double sir(const BssDecomposition& d);  // |s_target|^2 / |e_interf|^2
double sar(const BssDecomposition& d);  // |s_target + e_interf|^2 / |e_artif|^2
double isr(const BssDecomposition& d);  // |true source|^2 / |e_spatial|^2

struct BssMetrics {
  double sdr = 0.0;
  double sir = 0.0;
  double sar = 0.0;
  double isr = 0.0;
  bool capped = false;  // any ratio sits at the sentinel
};

BssMetrics metrics(const BssDecomposition& d);

/// SDR(estimate, true) - SDR(mixture, true). Only the true source enters
/// SDR, so no interferer set is needed.
double nsdr(std::span<const double> estimate, std::span<const double> true_source,
            std::span<const double> mixture, std::size_t filter_length = kDefaultFilterLength);

/// Arithmetic mean. Throws std::invalid_argument when empty.
double gnsdr(std::span<const double> clip_nsdr);

struct NsdrClip {
  std::vector<double> estimate;
  std::vector<double> truth;
  std::vector<double> mixture;
};
double gnsdr(std::span<const NsdrClip> clips, std::size_t filter_length = kDefaultFilterLength);

/// One row of an evaluation report.
struct ClipMetrics {
  std::string clip_id;
  std::string source;  // "voice" or "accompaniment"
  double sdr = 0.0;
  double sir = 0.0;
  double sar = 0.0;
  double isr = 0.0;
  double nsdr = 0.0;
  bool capped = false;
};

struct RecordingSummary {
  std::string recording_id;
  std::size_t candidate_clips = 0;
  std::size_t valid_clips = 0;
  std::map<std::string, double> mean_sdr;  // per source
};

struct EvalReport {
  std::string protocol;
  std::vector<ClipMetrics> clips;
  std::map<std::string, double> gnsdr;       // gnsdr protocol, per source
  std::vector<RecordingSummary> recordings;  // dsd100 protocol
  std::map<std::string, double> median_sdr;  // dsd100 protocol, per source
  std::vector<std::string> warnings;
};

/// Stems and estimates of one clip or recording, all at one rate and length.
struct SeparatedTrack {
  std::string id;
  AudioBuffer voice;
  AudioBuffer accompaniment;
  AudioBuffer voice_estimate;
  AudioBuffer accompaniment_estimate;
};

/// Per clip and source SDR/SIR/SAR/ISR and NSDR against the mixture
/// voice + accompaniment; stereo metrics are averaged over channels. GNSDR
/// per source is the mean NSDR over clips with a defined NSDR.
EvalReport evaluate_gnsdr(std::span<const SeparatedTrack> clips,
                          std::size_t filter_length = kDefaultFilterLength);

struct Dsd100Options {
  double clip_seconds = 30.0;
  double stride_seconds = 15.0;
  std::size_t filter_length = kDefaultFilterLength;
};

/// Sample offsets of the full clips in a recording: 0, stride, ... while a
/// whole clip fits. Partial tails are dropped.
std::vector<std::size_t> dsd100_clip_starts(std::size_t samples, int sample_rate,
                                            const Dsd100Options& options = {});

/// Median of a non-empty set (mean of the two middle values when even).
double median(std::vector<double> values);

/// Cuts each recording into clips, drops clips where any source metric is
/// NaN, averages the per-clip SDR into SDR_r per recording and reports the
/// median SDR_r over recordings per source. Recordings without a valid clip
/// are excluded with a warning.
EvalReport dsd100_protocol(std::span<const SeparatedTrack> recordings, const Dsd100Options& options = {});

/// CSV columns clip_id,source,SDR,NSDR (NSDR empty under dsd100), plus
/// SIR,SAR,ISR,capped.
void write_report_csv(const EvalReport& report, const std::filesystem::path& path);
void write_report_json(const EvalReport& report, const std::filesystem::path& path);

}  // namespace svsep
