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
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "svsep/dsp.hpp"
#include "svsep/manifest.hpp"
#include "svsep/network.hpp"

namespace svsep {

/// One network example: a 9-frame magnitude excerpt and its label, both
/// frame-major (9 x F). Labels are binary for separation training.
struct TrainingInstance {
  std::vector<float> input;
  std::vector<float> label;
  std::string clip_id;
  std::size_t channel = 0;
  std::size_t origin = 0;
};

struct InstanceSet {
  std::vector<TrainingInstance> instances;
  std::vector<std::string> skipped;  // clip ids too short for one excerpt
};

/// Mixture excerpts labelled with the voice IBM. Stems are resampled to the
/// config rate and summed into the mixture. Stereo clips alternate: even
/// excerpt indices come from the left channel, odd ones from the right.
/// The instances of each clip are shuffled with the "instances" stream.
/// Throws DataError naming the clip when stems differ in length or layout.
InstanceSet make_instances(std::span<const ClipStems> clips, const StftConfig& config,
                           std::size_t hop_frames, std::uint64_t seed);

enum class PretrainTarget {
  kVoiceActivity,  // 1 where the clean-voice magnitude is positive
  kMagnitude,      // excerpt magnitude scaled by its maximum
};

/// Clean-voice excerpts for autoencoder pretraining, built with the same
/// framing, alternation and shuffling as make_instances.
InstanceSet make_pretrain_instances(std::span<const ClipStems> clips, const StftConfig& config,
                                    std::size_t hop_frames, std::uint64_t seed,
                                    PretrainTarget target);

/// Maps label 0 to `lo` and 1 to `hi`. Throws std::invalid_argument for
/// non-binary labels or unless 0 <= lo < hi <= 1.
std::vector<float> smooth_targets(std::span<const float> label, double lo, double hi);

struct AdamHyper {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  friend bool operator==(const AdamHyper&, const AdamHyper&) = default;
};

/// Moments are kept at parameter precision so a checkpoint restores them
/// exactly.
struct AdamState {
  std::uint64_t step = 0;
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// One bias-corrected Adam update, computed in double. The state is sized
/// on first use. Throws OptimizerError naming the tensor if a gradient is
/// not finite; nothing is modified in that case.
template <typename S>
void adam_step(std::vector<ParamTensor<S>>& params, const Gradients& grads, AdamState& state,
               const AdamHyper& hyper);

struct TrainConfig {
  std::size_t batch_size = 171;
  std::size_t epochs = 300;
  AdamHyper adam;
  double smooth_lo = 0.02;
  double smooth_hi = 0.98;
  std::size_t pretrain_epochs = 300;
  PretrainTarget pretrain_target = PretrainTarget::kVoiceActivity;
  std::size_t hop_frames = 8;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument for an unusable combination.
  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 0 is the untrained baseline
  double train_loss = 0.0;
  double val_loss = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

/// Complete resumable training state.
struct Checkpoint {
  std::string stage = "train";  // "pretrain" or "train"; names the RNG streams
  StftConfig stft;
  double theta = 0.35;
  std::uint64_t seed = 0;
  Model best;
  Model current;
  AdamState adam;
  std::size_t epoch = 0;  // completed epochs
  std::size_t best_epoch = 0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  std::vector<EpochRecord> history;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

/// Thrown when the training loss or a gradient stops being finite. Carries
/// the state of the last completed epoch for diagnosis.
class TrainingAborted : public std::runtime_error {
 public:
  TrainingAborted(const std::string& what, Checkpoint checkpoint)
      : std::runtime_error(what), checkpoint_(std::move(checkpoint)) {}
  const Checkpoint& checkpoint() const noexcept { return checkpoint_; }

 private:
  Checkpoint checkpoint_;
};

/// Mean cross entropy of `model` over `instances` with dropout disabled and
/// labels smoothed as in training.
double evaluate_loss(const Model& model, std::span<const TrainingInstance> instances,
                     const TrainConfig& config);

using EpochCallback = std::function<void(const Checkpoint&)>;

/// Epoch loop: shuffle, batch (last partial batch kept), forward with
/// dropout, cross entropy, backward, Adam. After every epoch the validation
/// loss is recorded and the best model is kept. Epoch 0 records the
/// starting model. With `resume`, training continues from that state up to
/// config.epochs; otherwise it starts from `initial`.
Checkpoint train(const Model& initial, std::span<const TrainingInstance> train_set,
                 std::span<const TrainingInstance> val_set, const TrainConfig& config,
                 const StftConfig& stft, const Checkpoint* resume = nullptr,
                 const EpochCallback& on_epoch = {});

/// The same loop on clean-voice instances for config.pretrain_epochs
/// epochs; the best checkpoint initializes separation training.
Checkpoint pretrain_autoencoder(const Model& initial, std::span<const TrainingInstance> voice_train,
                                std::span<const TrainingInstance> voice_val,
                                const TrainConfig& config, const StftConfig& stft,
                                const Checkpoint* resume = nullptr, const EpochCallback& on_epoch = {});

/// {0, 0.05, ..., 0.5}
std::vector<double> default_threshold_grid();

struct ThresholdSweep {
  double theta = 0.0;
  std::vector<double> grid;
  std::vector<double> gnsdr;  // voice GNSDR per grid value
};

/// Separates every clip at each grid value and returns the threshold with
/// the highest voice GNSDR; ties go to the smaller threshold. Throws
/// std::invalid_argument for an empty grid or clip set, or values outside
/// [0, 1].
ThresholdSweep sweep_threshold(const Model& model, const StftConfig& stft,
                               std::span<const ClipStems> clips, std::span<const double> grid,
                               std::size_t filter_length = 512);

}  // namespace svsep
