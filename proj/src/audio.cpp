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

#include "svsep/audio.hpp"

#include <stdexcept>
#include <utility>

namespace svsep {

AudioBuffer::AudioBuffer(std::size_t channels, std::size_t frames, int sample_rate)
    : channels_(channels, std::vector<float>(frames, 0.0f)), sample_rate_(sample_rate) {
  validate();
}

AudioBuffer::AudioBuffer(std::vector<std::vector<float>> channels, int sample_rate)
    : channels_(std::move(channels)), sample_rate_(sample_rate) {
  validate();
}

AudioBuffer AudioBuffer::mono(std::vector<float> samples, int sample_rate) {
  std::vector<std::vector<float>> channels;
  channels.push_back(std::move(samples));
  return AudioBuffer(std::move(channels), sample_rate);
}

AudioBuffer AudioBuffer::extract_channel(std::size_t c) const {
  return mono(channels_.at(c), sample_rate_);
}

void AudioBuffer::resize(std::size_t frames) {
  for (auto& ch : channels_) ch.resize(frames, 0.0f);
}

void AudioBuffer::validate() const {
  if (sample_rate_ <= 0) throw std::invalid_argument("AudioBuffer: sample rate must be positive");
  if (channels_.empty()) throw std::invalid_argument("AudioBuffer: at least one channel required");
  for (const auto& ch : channels_) {
    if (ch.size() != channels_.front().size())
      throw std::invalid_argument("AudioBuffer: channels differ in length");
  }
}

AudioBuffer mix(const AudioBuffer& a, const AudioBuffer& b) {
  if (a.channels() != b.channels() || a.frames() != b.frames() ||
      a.sample_rate() != b.sample_rate()) {
    throw std::invalid_argument("mix: buffers differ in layout");
  }
  AudioBuffer out(a.channels(), a.frames(), a.sample_rate());
  for (std::size_t c = 0; c < a.channels(); ++c) {
    auto x = a.channel(c);
    auto y = b.channel(c);
    auto z = out.channel(c);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] + y[i];
  }
  return out;
}

}  // namespace svsep
