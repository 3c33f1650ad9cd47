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
#include <string>
#include <string_view>

#include "svsep/dsp.hpp"
#include "svsep/network.hpp"
#include "svsep/training.hpp"

namespace svsep {

/// Everything a training run needs besides the data.
struct RunConfig {
  StftConfig stft;
  NetworkGeometry geometry;  // bins always follow stft.bins()
  TrainConfig train;
  double theta = 0.35;        // used when the sweep is off
  bool sweep = true;          // pick theta on the validation split
  std::size_t filter_length = 512;

  /// Validates every part; throws std::invalid_argument.
  void validate() const;
};

/// Applies one `key=value` assignment. Keys:
///   seed epochs batch_size learning_rate beta1 beta2 epsilon smooth_lo
///   smooth_hi pretrain_epochs pretrain_target hop_frames
///   window_size hop_size fft_size sample_rate
///   geometry (full|tiny) kernel_time kernel_freq conv_stages pool_width
///   hidden dropout
///   theta sweep filter_length
/// conv_stages is written "32,16;64,32" and hidden "2048,512".
/// Throws std::invalid_argument naming the key on a bad key or value.
void apply_setting(RunConfig& config, std::string_view assignment);

/// Parses `key = value` lines; '#' starts a comment. `origin` prefixes
/// error messages.
RunConfig parse_config(std::string_view text, const std::string& origin = "config");
/// Throws IoError if unreadable.
RunConfig load_config(const std::filesystem::path& path);

/// Text that parse_config() reads back to an equal config.
std::string format_config(const RunConfig& config);

/// Small network and 8 kHz STFT sized for the synthetic fixtures.
RunConfig fixture_config();

}  // namespace svsep
