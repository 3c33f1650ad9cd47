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

#include "svsep/masks.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <utility>

#include "binary_io.hpp"
#include "svsep/error.hpp"

namespace svsep {

SoftMask::SoftMask(TfMatrix<float> values) : values_(std::move(values)) {
  for (float v : values_.data()) {
    if (!(v >= 0.0f && v <= 1.0f)) throw std::invalid_argument("SoftMask: value outside [0, 1]");
  }
}

SoftMask SoftMask::filled(std::size_t bins, std::size_t frames, float value) {
  return SoftMask(TfMatrix<float>(bins, frames, value));
}

SoftMask SoftMask::from(const BinaryMask& mask) {
  TfMatrix<float> v(mask.bins(), mask.frames());
  auto src = mask.bits.data();
  auto dst = v.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] ? 1.0f : 0.0f;
  return SoftMask(std::move(v));
}

BinaryMask ideal_binary_mask(const TfMatrix<double>& voice_mag,
                             const TfMatrix<double>& accomp_mag) {
  if (!voice_mag.same_shape(accomp_mag))
    throw std::invalid_argument("ideal_binary_mask: spectrogram shapes differ");
  BinaryMask mask{TfMatrix<std::uint8_t>(voice_mag.bins(), voice_mag.frames())};
  auto v = voice_mag.data();
  auto s = accomp_mag.data();
  auto b = mask.bits.data();
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = v[i] > s[i] ? 1 : 0;
  return mask;
}

BinaryMask complement(const BinaryMask& mask) {
  BinaryMask out = mask;
  for (auto& bit : out.bits.data()) bit = bit ? 0 : 1;
  return out;
}

SoftMask complement(const SoftMask& mask) {
  TfMatrix<float> v = mask.values();
  for (auto& x : v.data()) x = 1.0f - x;
  return SoftMask(std::move(v));
}

SoftMask threshold(const SoftMask& mask, double theta) {
  if (!(theta >= 0.0 && theta <= 1.0))
    throw std::invalid_argument("threshold: theta must lie in [0, 1]");
  TfMatrix<float> v = mask.values();
  for (auto& x : v.data()) {
    if (static_cast<double>(x) < theta) x = 0.0f;
  }
  return SoftMask(std::move(v));
}

std::vector<float> apply_mask(const SoftMask& mask, const Spectrogram& mixture) {
  if (!mask.values().same_shape(mixture.magnitude))
    throw std::invalid_argument("apply_mask: mask shape does not match the spectrogram");
  TfMatrix<double> masked = mixture.magnitude;
  auto m = mask.values().data();
  auto x = masked.data();
  for (std::size_t i = 0; i < x.size(); ++i) x[i] *= static_cast<double>(m[i]);
  return istft(masked, mixture.phase, mixture.config);
}

namespace {
constexpr char kMaskMagic[8] = {'S', 'V', 'M', 'A', 'S', 'K', '0', '1'};
constexpr std::uint32_t kMaskVersion = 1;
}  // namespace

void write_masks(const std::filesystem::path& path, const std::vector<SoftMask>& masks) {
  if (masks.empty()) throw std::invalid_argument("write_masks: no masks given");
  for (const auto& m : masks) {
    if (!m.values().same_shape(masks.front().values()))
      throw std::invalid_argument("write_masks: channel masks differ in shape");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(kMaskMagic, sizeof(kMaskMagic));
  detail::write_le<std::uint32_t>(out, kMaskVersion);
  detail::write_le<std::uint64_t>(out, masks.size());
  detail::write_le<std::uint64_t>(out, masks.front().frames());
  detail::write_le<std::uint64_t>(out, masks.front().bins());
  for (const auto& m : masks) detail::write_floats(out, m.values().data());
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<SoftMask> read_masks(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMaskMagic, sizeof(magic)) != 0)
    throw FormatError(path.string() + ": not a mask container");
  const auto version = detail::read_le<std::uint32_t>(in);
  if (version != kMaskVersion) throw UnsupportedFormat(path.string() + ": unknown mask version");
  const auto channels = detail::read_le<std::uint64_t>(in);
  const auto frames = detail::read_le<std::uint64_t>(in);
  const auto bins = detail::read_le<std::uint64_t>(in);
  if (!in || channels == 0 || channels > 2 || frames * bins > (std::uint64_t{1} << 32))
    throw FormatError(path.string() + ": bad mask header");
  std::vector<SoftMask> masks;
  for (std::uint64_t c = 0; c < channels; ++c) {
    TfMatrix<float> v(bins, frames);
    detail::read_floats(in, v.data());
    if (!in) throw FormatError(path.string() + ": truncated mask data");
    masks.emplace_back(std::move(v));
  }
  return masks;
}

}  // namespace svsep
