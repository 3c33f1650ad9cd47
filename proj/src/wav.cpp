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

#include "svsep/wav.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>
#include <vector>

#include "svsep/error.hpp"

namespace svsep {

namespace {

constexpr std::uint16_t kFormatPcm = 0x0001;
constexpr std::uint16_t kFormatFloat = 0x0003;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t u16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }
std::uint32_t u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xFF));
  out.push_back(static_cast<unsigned char>(v >> 8));
}
void put32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}
void put_tag(std::vector<unsigned char>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

}  // namespace

AudioBuffer load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string name = path.string();

  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw FormatError(name + ": not a RIFF/WAVE file");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || body + size > bytes.size()) throw FormatError(name + ": truncated fmt chunk");
      format = u16(bytes.data() + body);
      channels = u16(bytes.data() + body + 2);
      rate = u32(bytes.data() + body + 4);
      bits = u16(bytes.data() + body + 14);
      if (format == kFormatExtensible) {
        if (size < 40) throw FormatError(name + ": truncated extensible fmt chunk");
        format = u16(bytes.data() + body + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      // Tolerate writers that leave the data size unfinished.
      data_size = std::min<std::size_t>(size, bytes.size() - body);
    }
    pos = body + size + (size & 1);
  }
  if (!have_fmt) throw FormatError(name + ": missing fmt chunk");
  if (!data) throw FormatError(name + ": missing data chunk");
  if (rate == 0) throw FormatError(name + ": zero sample rate");
  if (channels < 1 || channels > 2)
    throw UnsupportedFormat(name + ": " + std::to_string(channels) + " channels (1 or 2 supported)");
  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32)
    throw UnsupportedFormat(name + ": only 16-bit PCM and 32-bit float are supported");

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frames = data_size / (bytes_per_sample * channels);
  std::vector<std::vector<float>> samples(channels, std::vector<float>(frames));
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* p = data + (i * channels + c) * bytes_per_sample;
      if (pcm16) {
        samples[c][i] = static_cast<float>(static_cast<std::int16_t>(u16(p))) / 32768.0f;
      } else {
        const std::uint32_t raw = u32(p);
        float v;
        std::memcpy(&v, &raw, sizeof(v));
        samples[c][i] = v;
      }
    }
  }
  return AudioBuffer(std::move(samples), static_cast<int>(rate));
}

WavWriteStats write_wav(const AudioBuffer& buffer, const std::filesystem::path& path,
                        SampleEncoding encoding) {
  const bool pcm16 = encoding == SampleEncoding::kPcm16;
  const std::uint16_t channels = static_cast<std::uint16_t>(buffer.channels());
  const std::uint16_t bits = pcm16 ? 16 : 32;
  const std::uint16_t block = static_cast<std::uint16_t>(channels * bits / 8);
  const std::size_t data_size = buffer.frames() * block;
  if (data_size > 0xFFFFFFF0u) throw std::invalid_argument("write_wav: buffer too large for RIFF");

  WavWriteStats stats;
  std::vector<unsigned char> out;
  out.reserve(44 + data_size);
  put_tag(out, "RIFF");
  put32(out, static_cast<std::uint32_t>(36 + data_size));
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put32(out, 16);
  put16(out, pcm16 ? kFormatPcm : kFormatFloat);
  put16(out, channels);
  put32(out, static_cast<std::uint32_t>(buffer.sample_rate()));
  put32(out, static_cast<std::uint32_t>(buffer.sample_rate()) * block);
  put16(out, block);
  put16(out, bits);
  put_tag(out, "data");
  put32(out, static_cast<std::uint32_t>(data_size));

  for (std::size_t i = 0; i < buffer.frames(); ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      float v = buffer.channel(c)[i];
      if (!std::isfinite(v)) throw std::invalid_argument("write_wav: non-finite sample");
      if (v > 1.0f || v < -1.0f) {
        ++stats.clipped;
        v = std::clamp(v, -1.0f, 1.0f);
      }
      if (pcm16) {
        const long q = std::lround(static_cast<double>(v) * 32768.0);
        put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::clamp(q, -32768L, 32767L))));
      } else {
        std::uint32_t raw;
        std::memcpy(&raw, &v, sizeof(raw));
        put32(out, raw);
      }
    }
  }

  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open " + path.string() + " for writing");
  file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!file) throw IoError("failed writing " + path.string());
  if (stats.clipped > 0)
    spdlog::warn("{}: clipped {} samples to [-1, 1]", path.string(), stats.clipped);
  return stats;
}

}  // namespace svsep
