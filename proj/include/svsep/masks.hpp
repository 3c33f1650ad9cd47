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
#include <vector>

#include "svsep/dsp.hpp"
#include "svsep/tf_matrix.hpp"

namespace svsep {

/// Ideal binary mask: 1 where the target dominates a bin, else 0.
struct BinaryMask {
  TfMatrix<std::uint8_t> bits;

  std::size_t bins() const noexcept { return bits.bins(); }
  std::size_t frames() const noexcept { return bits.frames(); }
};

/// Per-bin voice probability in [0, 1], stored at 32-bit precision.
class SoftMask {
 public:
  SoftMask() = default;
  /// Throws std::invalid_argument if any value lies outside [0, 1].
  explicit SoftMask(TfMatrix<float> values);

  static SoftMask filled(std::size_t bins, std::size_t frames, float value);
  static SoftMask from(const BinaryMask& mask);

  const TfMatrix<float>& values() const noexcept { return values_; }
  std::size_t bins() const noexcept { return values_.bins(); }
  std::size_t frames() const noexcept { return values_.frames(); }
  float operator()(std::size_t bin, std::size_t frame) const { return values_(bin, frame); }

  friend bool operator==(const SoftMask&, const SoftMask&) = default;

 private:
  TfMatrix<float> values_;
};

/// Bit is 1 where voice strictly exceeds accompaniment; ties go to 0.
BinaryMask ideal_binary_mask(const TfMatrix<double>& voice_mag, const TfMatrix<double>& accomp_mag);

/// |1 - B|
BinaryMask complement(const BinaryMask& mask);

/// 1 - m entry-wise. Applying it twice restores values on the 2^-24 grid
/// exactly and any other value to within one ulp.
SoftMask complement(const SoftMask& mask);

/// Entries below `theta` become 0, the rest are kept.
SoftMask threshold(const SoftMask& mask, double theta);

/// Scales `mixture` by a mask and resynthesizes with the mixture phase.
std::vector<float> apply_mask(const SoftMask& mask, const Spectrogram& mixture);

/// Mask container: "SVMASK01", u32 version, u64 channels, u64 frames, u64 bins,
/// then per channel frames x bins little-endian float32 in row-major order
/// (frame index is the row).
void write_masks(const std::filesystem::path& path, const std::vector<SoftMask>& masks);
std::vector<SoftMask> read_masks(const std::filesystem::path& path);

}  // namespace svsep
