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

#include "svsep/audio.hpp"
#include "svsep/dsp.hpp"
#include "svsep/manifest.hpp"
#include "svsep/masks.hpp"
#include "svsep/network.hpp"

namespace svsep {

inline constexpr double kDefaultTheta = 0.35;

/// Source of per-excerpt soft masks.
class MaskPredictor {
 public:
  virtual ~MaskPredictor() = default;
  /// `batch` is [B, 9, F]; `origins[b]` is the first frame of excerpt b in
  /// the track. Writes B x 9 x F values in [0, 1] to `out`.
  virtual void predict(const Tensor<float>& batch, std::span<const std::size_t> origins,
                       std::span<float> out) const = 0;
};

/// The mask network with dropout disabled.
class NetworkPredictor final : public MaskPredictor {
 public:
  explicit NetworkPredictor(const Model& model) : model_(model) {}
  void predict(const Tensor<float>& batch, std::span<const std::size_t> origins,
               std::span<float> out) const override;

 private:
  const Model& model_;
};

/// Emits one value everywhere.
class ConstantPredictor final : public MaskPredictor {
 public:
  explicit ConstantPredictor(float value);
  void predict(const Tensor<float>& batch, std::span<const std::size_t> origins,
               std::span<float> out) const override;

 private:
  float value_;
};

/// Emits excerpts of a precomputed full-track mask (e.g. the ideal binary
/// mask for oracle runs).
class FixedMaskPredictor final : public MaskPredictor {
 public:
  explicit FixedMaskPredictor(SoftMask mask) : mask_(std::move(mask)) {}
  void predict(const Tensor<float>& batch, std::span<const std::size_t> origins,
               std::span<float> out) const override;

 private:
  SoftMask mask_;
};

/// Slides the 9-frame predictor over the track with hop 1 and keeps the
/// middle frame (index 4) of each prediction for column origin + 4. The
/// first and last four columns take the corresponding frames of the first
/// and last excerpt. Values are clamped to [0, 1].
/// Throws std::invalid_argument for fewer than 9 frames.
SoftMask estimate_soft_mask(const MaskPredictor& predictor, const Spectrogram& spec,
                            std::size_t batch_size = 64);
SoftMask estimate_soft_mask(const Model& model, const Spectrogram& spec);

struct SeparationResult {
  AudioBuffer voice;
  AudioBuffer accompaniment;
  std::vector<SoftMask> voice_masks;  // one per channel, before thresholding
  double theta = kDefaultTheta;
};

/// Resamples to the STFT rate if needed. Throws UnsupportedFormat for more
/// than two channels and std::invalid_argument for audio shorter than one
/// window after resampling.
AudioBuffer prepare_input(const AudioBuffer& audio, const StftConfig& config);

/// Soft voice mask of every channel of already prepared audio.
std::vector<SoftMask> estimate_channel_masks(const AudioBuffer& prepared,
                                             const MaskPredictor& predictor,
                                             const StftConfig& config);

/// Per channel: threshold the voice mask at theta, take its complement as
/// the accompaniment mask, apply both to the mixture spectrogram and
/// resynthesize. Outputs are zero-padded to the input length.
SeparationResult separate_with_masks(const AudioBuffer& prepared, std::vector<SoftMask> voice_masks,
                                     double theta, const StftConfig& config);

SeparationResult separate(const AudioBuffer& audio, const MaskPredictor& predictor, double theta,
                          const StftConfig& config);
SeparationResult separate(const AudioBuffer& audio, const Model& model, double theta,
                          const StftConfig& config);

/// Oracle separation with the ideal binary voice mask of each channel.
SeparationResult separate_with_ibm(const ClipStems& stems, const StftConfig& config);

}  // namespace svsep
