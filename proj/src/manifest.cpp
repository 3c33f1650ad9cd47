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

#include "svsep/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "svsep/error.hpp"
#include "svsep/random.hpp"
#include "svsep/wav.hpp"

namespace svsep {

namespace {

constexpr std::string_view kHeader = "# svsep-manifest v1";

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
  }
  return "?";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "validation") return Split::kValidation;
  if (text == "test") return Split::kTest;
  throw std::invalid_argument("unknown split '" + std::string(text) + "'");
}

std::vector<ManifestEntry> Manifest::in_split(Split split) const {
  std::vector<ManifestEntry> out;
  std::copy_if(entries.begin(), entries.end(), std::back_inserter(out),
               [&](const ManifestEntry& e) { return e.split == split; });
  return out;
}

std::filesystem::path Manifest::resolve(const std::filesystem::path& p) const {
  return p.is_absolute() ? p : base_dir / p;
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  Manifest m;
  m.base_dir = path.parent_path();
  std::string line;
  if (!std::getline(in, line) || line.rfind(kHeader, 0) != 0)
    throw FormatError(path.string() + ": missing '" + std::string(kHeader) + "' header");

  std::set<std::string> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto f = split_tabs(line);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (f.size() != 5) throw FormatError(where + ": expected 5 tab-separated fields");
    ManifestEntry e;
    e.clip_id = f[0];
    e.voice = f[1];
    e.accompaniment = f[2];
    try {
      e.split = parse_split(f[3]);
    } catch (const std::invalid_argument& err) {
      throw FormatError(where + ": " + err.what());
    }
    if (f[4] == "1" || f[4] == "mono") {
      e.channels = 1;
    } else if (f[4] == "2" || f[4] == "stereo") {
      e.channels = 2;
    } else {
      throw FormatError(where + ": channel layout must be 1/mono or 2/stereo");
    }
    if (e.clip_id.empty()) throw FormatError(where + ": empty clip id");
    if (!seen.insert(e.clip_id).second) throw DataError(where + ": duplicate clip id " + e.clip_id);
    m.entries.push_back(std::move(e));
  }
  return m;
}

void save_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << kHeader << "\n";
  for (const auto& e : manifest.entries) {
    out << e.clip_id << '\t' << e.voice.generic_string() << '\t' << e.accompaniment.generic_string()
        << '\t' << to_string(e.split) << '\t' << e.channels << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

ClipStems load_stems(const Manifest& manifest, const ManifestEntry& entry) {
  ClipStems stems{entry.clip_id, {}, {}};
  try {
    stems.voice = load_wav(manifest.resolve(entry.voice));
    stems.accompaniment = load_wav(manifest.resolve(entry.accompaniment));
  } catch (const IoError& e) {
    throw DataError("clip " + entry.clip_id + ": " + e.what());
  }
  const auto& v = stems.voice;
  const auto& s = stems.accompaniment;
  if (v.sample_rate() != s.sample_rate())
    throw DataError("clip " + entry.clip_id + ": stems differ in sample rate");
  if (v.frames() != s.frames()) throw DataError("clip " + entry.clip_id + ": stems differ in length");
  if (v.channels() != s.channels() || v.channels() != static_cast<std::size_t>(entry.channels))
    throw DataError("clip " + entry.clip_id + ": channel count does not match the manifest");
  return stems;
}

void validate_manifest(const Manifest& manifest) {
  for (const auto& e : manifest.entries) load_stems(manifest, e);
}

std::array<std::size_t, 3> split_counts(std::size_t n, const SplitRatios& r) {
  if (r.train < 0 || r.validation < 0 || r.test < 0 ||
      std::abs(r.train + r.validation + r.test - 1.0) > 1e-9)
    throw std::invalid_argument("split ratios must be non-negative and sum to 1");
  // A tiny epsilon keeps products such as 252 * 0.2 from flooring to 49.
  const auto part = [n](double ratio) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratio + 1e-9));
  };
  const std::size_t val = part(r.validation);
  const std::size_t test = part(r.test);
  return {n - val - test, val, test};
}

Manifest split_manifest(const Manifest& manifest, const SplitRatios& ratios, std::uint64_t seed) {
  if (manifest.entries.empty()) throw std::invalid_argument("split_manifest: empty manifest");
  const auto counts = split_counts(manifest.entries.size(), ratios);
  std::vector<std::size_t> order(manifest.entries.size());
  std::iota(order.begin(), order.end(), 0);
  auto rng = make_stream(seed, "split");
  std::shuffle(order.begin(), order.end(), rng);

  Manifest out = manifest;
  std::size_t k = 0;
  for (std::size_t s = 0; s < 3; ++s)
    for (std::size_t c = 0; c < counts[s]; ++c) out.entries[order[k++]].split = static_cast<Split>(s);
  return out;
}

}  // namespace svsep
