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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "svsep/audio.hpp"

namespace svsep {

enum class Split { kTrain, kValidation, kTest };

std::string_view to_string(Split split);
/// Accepts "train", "validation" and "test".
Split parse_split(std::string_view text);

struct ManifestEntry {
  std::string clip_id;
  std::filesystem::path voice;          // relative paths resolve against the manifest directory
  std::filesystem::path accompaniment;
  Split split = Split::kTrain;
  int channels = 1;                     // 1 (mono) or 2 (stereo)

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

/// Tab-separated text file:
///
///   # svsep-manifest v1
///   clip_id<TAB>voice<TAB>accompaniment<TAB>split<TAB>channels
///   ...
///
/// Blank lines and further lines starting with '#' are ignored.
struct Manifest {
  std::vector<ManifestEntry> entries;
  std::filesystem::path base_dir;

  std::vector<ManifestEntry> in_split(Split split) const;
  std::filesystem::path resolve(const std::filesystem::path& p) const;
};

/// Throws IoError if unreadable, FormatError for a bad header or row and
/// DataError for duplicate clip ids.
Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

struct ClipStems {
  std::string clip_id;
  AudioBuffer voice;
  AudioBuffer accompaniment;
};

/// Loads both stems and checks them against each other and the entry.
/// Throws DataError naming the clip on a rate, length or channel mismatch.
ClipStems load_stems(const Manifest& manifest, const ManifestEntry& entry);

/// Loads every stem of the manifest to check that it exists and matches its
/// partner. Throws DataError naming the first offending clip.
void validate_manifest(const Manifest& manifest);

struct SplitRatios {
  double train = 0.6;
  double validation = 0.2;
  double test = 0.2;
};

/// Entry counts per split: validation and test get floor(n * ratio), the
/// training split takes the remainder. Ratios must be non-negative and sum
/// to 1 (within 1e-9).
std::array<std::size_t, 3> split_counts(std::size_t n, const SplitRatios& ratios);

/// Reassigns every entry to a split after a seeded shuffle. Entry order is
/// preserved; only the `split` fields change.
Manifest split_manifest(const Manifest& manifest, const SplitRatios& ratios, std::uint64_t seed);

}  // namespace svsep
