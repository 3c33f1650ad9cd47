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
#include <span>
#include <vector>

namespace svsep {

/// Multi-channel sample buffer. Samples are nominally in [-1, 1].
class AudioBuffer {
 public:
  AudioBuffer() = default;
  AudioBuffer(std::size_t channels, std::size_t frames, int sample_rate);
  AudioBuffer(std::vector<std::vector<float>> channels, int sample_rate);

  static AudioBuffer mono(std::vector<float> samples, int sample_rate);

  std::size_t channels() const noexcept { return channels_.size(); }
  std::size_t frames() const noexcept {
    return channels_.empty() ? 0 : channels_.front().size();
  }
  int sample_rate() const noexcept { return sample_rate_; }
  double duration_seconds() const noexcept {
    return sample_rate_ > 0 ? static_cast<double>(frames()) / sample_rate_ : 0.0;
  }

  std::span<float> channel(std::size_t c) { return channels_.at(c); }
  std::span<const float> channel(std::size_t c) const { return channels_.at(c); }

  /// Copies channel `c` out as a mono buffer.
  AudioBuffer extract_channel(std::size_t c) const;

  /// Truncates or zero-pads every channel to `frames` samples.
  void resize(std::size_t frames);

  friend bool operator==(const AudioBuffer&, const AudioBuffer&) = default;

 private:
  void validate() const;

  std::vector<std::vector<float>> channels_;
  int sample_rate_ = 0;
};

/// Sample-wise sum of two buffers with identical layout.
AudioBuffer mix(const AudioBuffer& a, const AudioBuffer& b);

}  // namespace svsep
