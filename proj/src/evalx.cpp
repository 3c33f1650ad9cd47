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

#include "svsep/evalx.hpp"

#include <Eigen/Dense>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <fstream>
#include <limits>
#include <numeric>
#include <json.hpp>
#include <stdexcept>

#include "fft.hpp"
#include "svsep/error.hpp"
#include "svsep/parallel.hpp"

namespace svsep {

namespace {

constexpr double kRegularization = 1e-10;
constexpr int kRefinementSteps = 2;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using Spectrum = std::vector<std::complex<double>>;

double energy(std::span<const double> x) { return std::inner_product(x.begin(), x.end(), x.begin(), 0.0); }

// Regularized factorization of a Gram matrix, refined against the exact one.
struct GramSolver {
  Eigen::MatrixXd gram;
  Eigen::LDLT<Eigen::MatrixXd> ldlt;
  bool zero = false;

  explicit GramSolver(Eigen::MatrixXd g) : gram(std::move(g)) {
    const double mean_diag = gram.diagonal().mean();
    zero = !(mean_diag > 0.0);
    if (zero) return;
    Eigen::MatrixXd reg = gram;
    reg.diagonal().array() += kRegularization * mean_diag;
    ldlt.compute(reg);
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    if (zero) return Eigen::VectorXd::Zero(rhs.size());
    Eigen::VectorXd c = ldlt.solve(rhs);
    for (int k = 0; k < kRefinementSteps; ++k) c += ldlt.solve(rhs - gram * c);
    return c;
  }
};

}  // namespace

struct BssProjector::Impl {
  std::size_t n = 0;
  std::size_t taps = 0;
  std::size_t nfft = 0;
  std::vector<std::vector<double>> sources;
  std::vector<Spectrum> spectra;
  std::vector<double> energies;
  std::unique_ptr<GramSolver> all;
  std::vector<std::unique_ptr<GramSolver>> single;

  // corr[d] = sum_t x(t) y(t + d), circular over nfft.
  std::vector<double> correlate(detail::RealFft& fft, const Spectrum& x, const Spectrum& y) const {
    Spectrum prod(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) prod[k] = std::conj(x[k]) * y[k];
    std::vector<double> out(nfft);
    fft.inverse(prod, out);
    for (auto& v : out) v /= static_cast<double>(nfft);
    return out;
  }

  double lag(const std::vector<double>& corr, long d) const {
    return corr[static_cast<std::size_t>(d >= 0 ? d : static_cast<long>(nfft) + d)];
  }

  // Projection of an estimate (given by its spectrum) onto the filtered
  // versions of `members`.
  std::vector<double> project(detail::RealFft& fft, const Spectrum& est, const std::vector<std::size_t>& members,
                              const GramSolver& solver) const {
    const std::size_t dim = members.size() * taps;
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(dim));
    for (std::size_t m = 0; m < members.size(); ++m) {
      const auto corr = correlate(fft, spectra[members[m]], est);
      for (std::size_t a = 0; a < taps; ++a) rhs(static_cast<Eigen::Index>(m * taps + a)) = corr[a];
    }
    const Eigen::VectorXd c = solver.solve(rhs);

    Spectrum acc(nfft / 2 + 1, 0.0);
    Spectrum filt(nfft / 2 + 1);
    std::vector<double> coeffs(taps);
    for (std::size_t m = 0; m < members.size(); ++m) {
      for (std::size_t a = 0; a < taps; ++a) coeffs[a] = c(static_cast<Eigen::Index>(m * taps + a));
      fft.forward(coeffs, filt);
      const auto& s = spectra[members[m]];
      for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += filt[k] * s[k];
    }
    std::vector<double> out(nfft);
    fft.inverse(acc, out);
    out.resize(n + taps - 1);
    for (auto& v : out) v /= static_cast<double>(nfft);
    return out;
  }

  Eigen::MatrixXd gram(detail::RealFft& fft, const std::vector<std::size_t>& members) const {
    const std::size_t dim = members.size() * taps;
    Eigen::MatrixXd g(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t j = 0; j < members.size(); ++j) {
      for (std::size_t k = j; k < members.size(); ++k) {
        const auto corr = correlate(fft, spectra[members[j]], spectra[members[k]]);
        for (std::size_t a = 0; a < taps; ++a) {
          for (std::size_t b = 0; b < taps; ++b) {
            const double v = lag(corr, static_cast<long>(a) - static_cast<long>(b));
            const auto r = static_cast<Eigen::Index>(j * taps + a);
            const auto col = static_cast<Eigen::Index>(k * taps + b);
            g(r, col) = v;
            g(col, r) = v;
          }
        }
      }
    }
    return g;
  }
};

BssProjector::BssProjector(std::vector<std::vector<double>> sources, std::size_t filter_length)
    : impl_(std::make_unique<Impl>()) {
  if (sources.empty()) throw std::invalid_argument("BssProjector: no sources");
  if (filter_length < 1) throw std::invalid_argument("BssProjector: filter length must be >= 1");
  const std::size_t n = sources.front().size();
  if (n == 0) throw std::invalid_argument("BssProjector: empty sources");
  for (const auto& s : sources)
    if (s.size() != n) throw std::invalid_argument("BssProjector: sources differ in length");

  auto& im = *impl_;
  im.n = n;
  im.taps = filter_length;
  im.nfft = detail::fast_fft_size(n + filter_length - 1);
  detail::RealFft fft(im.nfft);
  for (const auto& s : sources) {
    Spectrum spec(fft.bins());
    fft.forward(s, spec);
    im.spectra.push_back(std::move(spec));
    im.energies.push_back(energy(s));
  }
  im.sources = std::move(sources);

  std::vector<std::size_t> everyone(im.sources.size());
  std::iota(everyone.begin(), everyone.end(), 0);
  im.all = std::make_unique<GramSolver>(im.gram(fft, everyone));
  for (std::size_t j = 0; j < im.sources.size(); ++j) {
    // The single-source Gram is the diagonal block of the full one.
    const auto off = static_cast<Eigen::Index>(j * filter_length);
    const auto len = static_cast<Eigen::Index>(filter_length);
    im.single.push_back(std::make_unique<GramSolver>(im.all->gram.block(off, off, len, len)));
  }
}

BssProjector::~BssProjector() = default;
BssProjector::BssProjector(BssProjector&&) noexcept = default;
BssProjector& BssProjector::operator=(BssProjector&&) noexcept = default;

std::size_t BssProjector::source_count() const noexcept { return impl_->sources.size(); }
std::size_t BssProjector::length() const noexcept { return impl_->n; }

BssDecomposition BssProjector::decompose(std::span<const double> estimate, std::size_t target) const {
  const auto& im = *impl_;
  if (estimate.size() != im.n) throw std::invalid_argument("decompose: estimate length differs from the sources");
  if (target >= im.sources.size()) throw std::out_of_range("decompose: bad target index");

  detail::RealFft fft(im.nfft);
  Spectrum est(fft.bins());
  fft.forward(estimate, est);

  const std::size_t len = im.n + im.taps - 1;
  BssDecomposition d;
  d.filter_length = im.taps;
  d.degenerate = !(im.energies[target] > 0.0);
  d.true_source.assign(len, 0.0);
  std::copy(im.sources[target].begin(), im.sources[target].end(), d.true_source.begin());

  std::vector<std::size_t> everyone(im.sources.size());
  std::iota(everyone.begin(), everyone.end(), 0);
  const auto p_all = im.project(fft, est, everyone, *im.all);
  d.s_target = im.project(fft, est, {target}, *im.single[target]);

  d.e_interf.resize(len);
  d.e_artif.resize(len);
  d.e_spatial.resize(len);
  for (std::size_t t = 0; t < len; ++t) {
    const double e = t < im.n ? estimate[t] : 0.0;
    d.e_interf[t] = p_all[t] - d.s_target[t];
    d.e_artif[t] = e - p_all[t];
    d.e_spatial[t] = d.s_target[t] - d.true_source[t];
  }
  return d;
}

BssDecomposition decompose(std::span<const double> estimate, std::span<const double> true_source,
                           const std::vector<std::vector<double>>& interferers, std::size_t filter_length) {
  std::vector<std::vector<double>> sources;
  sources.emplace_back(true_source.begin(), true_source.end());
  for (const auto& s : interferers) sources.push_back(s);
  return BssProjector(std::move(sources), filter_length).decompose(estimate, 0);
}

double ratio_db(double num, double den) {
  if (std::isnan(num) || std::isnan(den)) return kNaN;
  if (den == 0.0) return num == 0.0 ? kNaN : kSdrSentinel;
  if (num == 0.0) return -kSdrSentinel;
  return std::clamp(10.0 * std::log10(num / den), -kSdrSentinel, kSdrSentinel);
}

namespace {

double energy_of_sum(const std::vector<double>& a, const std::vector<double>& b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) e += (a[i] + b[i]) * (a[i] + b[i]);
  return e;
}

}  // namespace

double sdr(const BssDecomposition& d) {
  if (d.degenerate) return kNaN;
  return ratio_db(energy(d.s_target), energy_of_sum(d.e_interf, d.e_artif));
}

double sir(const BssDecomposition& d) {
  if (d.degenerate) return kNaN;
  return ratio_db(energy(d.s_target), energy(d.e_interf));
}

double sar(const BssDecomposition& d) {
  if (d.degenerate) return kNaN;
  return ratio_db(energy_of_sum(d.s_target, d.e_interf), energy(d.e_artif));
}

double isr(const BssDecomposition& d) {
  if (d.degenerate) return kNaN;
  return ratio_db(energy(d.true_source), energy(d.e_spatial));
}

BssMetrics metrics(const BssDecomposition& d) {
  BssMetrics m{sdr(d), sir(d), sar(d), isr(d), false};
  for (double v : {m.sdr, m.sir, m.sar, m.isr})
    if (std::abs(v) == kSdrSentinel) m.capped = true;
  return m;
}

double nsdr(std::span<const double> estimate, std::span<const double> true_source,
            std::span<const double> mixture, std::size_t filter_length) {
  if (estimate.size() != true_source.size() || mixture.size() != true_source.size())
    throw std::invalid_argument("nsdr: signals differ in length");
  BssProjector p({std::vector<double>(true_source.begin(), true_source.end())}, filter_length);
  return sdr(p.decompose(estimate, 0)) - sdr(p.decompose(mixture, 0));
}

double gnsdr(std::span<const double> clip_nsdr) {
  if (clip_nsdr.empty()) throw std::invalid_argument("gnsdr: no clips");
  return std::accumulate(clip_nsdr.begin(), clip_nsdr.end(), 0.0) / static_cast<double>(clip_nsdr.size());
}

double gnsdr(std::span<const NsdrClip> clips, std::size_t filter_length) {
  if (clips.empty()) throw std::invalid_argument("gnsdr: no clips");
  std::vector<double> values;
  for (const auto& c : clips) values.push_back(nsdr(c.estimate, c.truth, c.mixture, filter_length));
  return gnsdr(values);
}

namespace {

const char* const kSources[2] = {"voice", "accompaniment"};

std::vector<double> to_double(std::span<const float> x, std::size_t begin, std::size_t count) {
  return std::vector<double>(x.begin() + static_cast<std::ptrdiff_t>(begin),
                             x.begin() + static_cast<std::ptrdiff_t>(begin + count));
}

void check_track(const SeparatedTrack& t) {
  const auto& v = t.voice;
  for (const AudioBuffer* b : {&t.accompaniment, &t.voice_estimate, &t.accompaniment_estimate}) {
    if (b->frames() != v.frames() || b->channels() != v.channels() || b->sample_rate() != v.sample_rate())
      throw DataError("track " + t.id + ": stems and estimates differ in length, channels or rate");
  }
}

// Metrics of both sources over [begin, begin + count), averaged over channels.
// Row 0 is voice, row 1 accompaniment.
std::array<ClipMetrics, 2> segment_metrics(const SeparatedTrack& t, std::size_t begin, std::size_t count,
                                           std::size_t filter_length, const std::string& id) {
  std::array<ClipMetrics, 2> rows;
  const auto channels = t.voice.channels();
  for (std::size_t s = 0; s < 2; ++s) {
    rows[s].clip_id = id;
    rows[s].source = kSources[s];
  }
  for (std::size_t c = 0; c < channels; ++c) {
    auto v = to_double(t.voice.channel(c), begin, count);
    auto a = to_double(t.accompaniment.channel(c), begin, count);
    std::vector<double> mixture(count);
    for (std::size_t i = 0; i < count; ++i) mixture[i] = v[i] + a[i];
    const BssProjector projector({std::move(v), std::move(a)}, filter_length);
    const std::vector<double> estimates[2] = {to_double(t.voice_estimate.channel(c), begin, count),
                                              to_double(t.accompaniment_estimate.channel(c), begin, count)};
    for (std::size_t s = 0; s < 2; ++s) {
      const auto m = metrics(projector.decompose(estimates[s], s));
      const double mix_sdr = sdr(projector.decompose(mixture, s));
      const double w = 1.0 / static_cast<double>(channels);
      rows[s].sdr += w * m.sdr;
      rows[s].sir += w * m.sir;
      rows[s].sar += w * m.sar;
      rows[s].isr += w * m.isr;
      rows[s].nsdr += w * (m.sdr - mix_sdr);
      rows[s].capped = rows[s].capped || m.capped;
    }
  }
  return rows;
}

}  // namespace

EvalReport evaluate_gnsdr(std::span<const SeparatedTrack> clips, std::size_t filter_length) {
  if (clips.empty()) throw std::invalid_argument("evaluate_gnsdr: no clips");
  for (const auto& t : clips) check_track(t);
  std::vector<std::array<ClipMetrics, 2>> rows(clips.size());
  parallel_for(clips.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i)
      rows[i] = segment_metrics(clips[i], 0, clips[i].voice.frames(), filter_length, clips[i].id);
  });

  EvalReport report;
  report.protocol = "gnsdr";
  std::array<std::vector<double>, 2> values;
  for (const auto& pair : rows) {
    for (std::size_t s = 0; s < 2; ++s) {
      report.clips.push_back(pair[s]);
      if (std::isnan(pair[s].nsdr)) {
        report.warnings.push_back("clip " + pair[s].clip_id + ": " + kSources[s] + " NSDR undefined, excluded");
        spdlog::warn("{}", report.warnings.back());
      } else {
        values[s].push_back(pair[s].nsdr);
      }
    }
  }
  for (std::size_t s = 0; s < 2; ++s)
    report.gnsdr[kSources[s]] = values[s].empty() ? kNaN : gnsdr(values[s]);
  return report;
}

std::vector<std::size_t> dsd100_clip_starts(std::size_t samples, int sample_rate, const Dsd100Options& o) {
  if (sample_rate <= 0 || !(o.clip_seconds > 0.0) || !(o.stride_seconds > 0.0))
    throw std::invalid_argument("dsd100_clip_starts: rate, clip and stride must be positive");
  const auto clip = static_cast<std::size_t>(std::llround(o.clip_seconds * sample_rate));
  const auto stride = static_cast<std::size_t>(std::llround(o.stride_seconds * sample_rate));
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + clip <= samples; s += stride) starts.push_back(s);
  return starts;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median: empty set");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

EvalReport dsd100_protocol(std::span<const SeparatedTrack> recordings, const Dsd100Options& options) {
  EvalReport report;
  report.protocol = "dsd100";
  std::array<std::vector<double>, 2> per_recording;
  for (const auto& rec : recordings) {
    check_track(rec);
    const int rate = rec.voice.sample_rate();
    const auto starts = dsd100_clip_starts(rec.voice.frames(), rate, options);
    const auto clip_len = static_cast<std::size_t>(std::llround(options.clip_seconds * rate));
    RecordingSummary summary;
    summary.recording_id = rec.id;
    summary.candidate_clips = starts.size();

    std::vector<std::array<ClipMetrics, 2>> rows(starts.size());
    parallel_for(starts.size(), [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i)
        rows[i] = segment_metrics(rec, starts[i], clip_len, options.filter_length,
                                  fmt::format("{}@{}", rec.id, starts[i]));
    });

    std::array<double, 2> sums{0.0, 0.0};
    for (auto& pair : rows) {
      const bool valid = !std::isnan(pair[0].sdr) && !std::isnan(pair[1].sdr);
      for (auto& row : pair) {
        row.nsdr = kNaN;  // the protocol reports SDR only
        report.clips.push_back(row);
      }
      if (!valid) {
        report.warnings.push_back("clip " + pair[0].clip_id + ": SDR undefined, excluded");
        continue;
      }
      ++summary.valid_clips;
      for (std::size_t s = 0; s < 2; ++s) sums[s] += pair[s].sdr;
    }
    if (summary.valid_clips == 0) {
      report.warnings.push_back("recording " + rec.id + ": no valid 30 s clip, excluded");
      spdlog::warn("{}", report.warnings.back());
      report.recordings.push_back(std::move(summary));
      continue;
    }
    for (std::size_t s = 0; s < 2; ++s) {
      const double mean = sums[s] / static_cast<double>(summary.valid_clips);
      summary.mean_sdr[kSources[s]] = mean;
      per_recording[s].push_back(mean);
    }
    report.recordings.push_back(std::move(summary));
  }
  for (std::size_t s = 0; s < 2; ++s)
    report.median_sdr[kSources[s]] = per_recording[s].empty() ? kNaN : median(per_recording[s]);
  return report;
}

namespace {

std::string num(double v) { return std::isnan(v) ? std::string() : fmt::format("{}", v); }

nlohmann::json num_json(double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); }

}  // namespace

void write_report_csv(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "clip_id,source,SDR,NSDR,SIR,SAR,ISR,capped\n";
  for (const auto& r : report.clips) {
    out << r.clip_id << ',' << r.source << ',' << num(r.sdr) << ',' << num(r.nsdr) << ',' << num(r.sir) << ','
        << num(r.sar) << ',' << num(r.isr) << ',' << (r.capped ? 1 : 0) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

void write_report_json(const EvalReport& report, const std::filesystem::path& path) {
  nlohmann::json j;
  j["protocol"] = report.protocol;
  j["clips"] = report.clips.size();
  if (report.protocol == "gnsdr") {
    for (const auto& [source, value] : report.gnsdr) j["gnsdr"][source] = num_json(value);
  } else {
    for (const auto& [source, value] : report.median_sdr) j["median_sdr"][source] = num_json(value);
    for (const auto& r : report.recordings) {
      nlohmann::json rec{{"id", r.recording_id}, {"candidate_clips", r.candidate_clips},
                         {"valid_clips", r.valid_clips}};
      for (const auto& [source, value] : r.mean_sdr) rec["mean_sdr"][source] = num_json(value);
      j["recordings"].push_back(rec);
    }
  }
  j["warnings"] = report.warnings;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace svsep
