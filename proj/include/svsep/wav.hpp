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

#include "svsep/audio.hpp"

namespace svsep {

enum class SampleEncoding { kPcm16, kFloat32 };

/// Reads a RIFF/WAVE file holding 16-bit PCM or 32-bit float samples with
/// one or two channels. PCM is scaled by 1/32768.
/// Throws FormatError for malformed files, UnsupportedFormat for other
/// encodings or channel counts and IoError when the file cannot be read.
AudioBuffer load_wav(const std::filesystem::path& path);

struct WavWriteStats {
  std::size_t clipped = 0;  // samples clamped into [-1, 1]
};

/// Writes `buffer`, clamping samples to [-1, 1]. Non-finite samples are
/// rejected with std::invalid_argument.
WavWriteStats write_wav(const AudioBuffer& buffer, const std::filesystem::path& path,
                        SampleEncoding encoding = SampleEncoding::kFloat32);

}  // namespace svsep
