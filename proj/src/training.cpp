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

#include "svsep/training.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "svsep/error.hpp"
#include "svsep/masks.hpp"
#include "svsep/random.hpp"

namespace svsep {

namespace {

struct ChannelSpectra {
  Spectrogram voice;
  Spectrogram accompaniment;
  Spectrogram mixture;
};

void check_stems(const ClipStems& clip) {
  const auto& v = clip.voice;
  const auto& s = clip.accompaniment;
  if (v.frames() != s.frames()) throw DataError("clip " + clip.clip_id + ": stems differ in length");
  if (v.channels() != s.channels())
    throw DataError("clip " + clip.clip_id + ": stems differ in channel count");
  if (v.sample_rate() != s.sample_rate())
    throw DataError("clip " + clip.clip_id + ": stems differ in sample rate");
}

// Shared driver: `fill` writes input and label of one excerpt.
template <typename Fill>
InstanceSet build_instances(std::span<const ClipStems> clips, const StftConfig& config,
                            std::size_t hop_frames, std::uint64_t seed, bool need_mixture,
                            Fill fill) {
  config.validate();
  InstanceSet set;
  const std::size_t f = config.bins();
  for (std::size_t ci = 0; ci < clips.size(); ++ci) {
    const auto& clip = clips[ci];
    check_stems(clip);
    const auto voice = resample(clip.voice, config.sample_rate);
    const auto accomp = resample(clip.accompaniment, config.sample_rate);
    const std::size_t channels = voice.channels();
    const auto origins = excerpt_origins(config.frame_count(voice.frames()), hop_frames);
    if (origins.empty()) {
      spdlog::warn("clip {}: shorter than one {}-frame excerpt, no instances", clip.clip_id,
                   kExcerptFrames);
      set.skipped.push_back(clip.clip_id);
      continue;
    }

    std::vector<ChannelSpectra> spectra;
    for (std::size_t c = 0; c < channels; ++c) {
      const auto v = voice.extract_channel(c);
      const auto s = accomp.extract_channel(c);
      ChannelSpectra cs{stft(v, config), stft(s, config), {}};
      if (need_mixture) cs.mixture = stft(mix(v, s), config);
      spectra.push_back(std::move(cs));
    }

    std::vector<TrainingInstance> local;
    local.reserve(origins.size());
    for (std::size_t i = 0; i < origins.size(); ++i) {
      TrainingInstance inst;
      inst.clip_id = clip.clip_id;
      inst.channel = channels == 2 ? i % 2 : 0;
      inst.origin = origins[i];
      inst.input.resize(kExcerptFrames * f);
      inst.label.resize(kExcerptFrames * f);
      fill(spectra[inst.channel], inst);
      local.push_back(std::move(inst));
    }
    auto rng = make_stream(seed, "instances", {ci});
    std::shuffle(local.begin(), local.end(), rng);
    std::move(local.begin(), local.end(), std::back_inserter(set.instances));
  }
  return set;
}

Tensor<float> gather_inputs(std::span<const TrainingInstance> all, std::span<const std::size_t> idx,
                            const NetworkGeometry& g) {
  Tensor<float> t({idx.size(), g.frames, g.bins});
  const std::size_t n = g.input_size();
  for (std::size_t b = 0; b < idx.size(); ++b) {
    const auto& in = all[idx[b]].input;
    if (in.size() != n) throw std::invalid_argument("training instance does not match the network input");
    std::copy(in.begin(), in.end(), t.data.begin() + static_cast<std::ptrdiff_t>(b * n));
  }
  return t;
}

Tensor<float> gather_targets(std::span<const TrainingInstance> all, std::span<const std::size_t> idx,
                             const NetworkGeometry& g, double lo, double hi) {
  Tensor<float> t({idx.size(), g.output_size()});
  const std::size_t n = g.output_size();
  for (std::size_t b = 0; b < idx.size(); ++b) {
    const auto& label = all[idx[b]].label;
    if (label.size() != n) throw std::invalid_argument("training label does not match the network output");
    // Linear in the label, so binary labels land exactly on lo and hi.
    for (std::size_t i = 0; i < n; ++i)
      t.data[b * n + i] = static_cast<float>(lo + (hi - lo) * static_cast<double>(label[i]));
  }
  return t;
}

double instances_loss(const Model& model, std::span<const TrainingInstance> instances,
                      const TrainConfig& config) {
  const auto& g = model.geometry();
  double total = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < instances.size(); start += config.batch_size) {
    const std::size_t end = std::min(instances.size(), start + config.batch_size);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const auto x = gather_inputs(instances, idx, g);
    const auto t = gather_targets(instances, idx, g, config.smooth_lo, config.smooth_hi);
    const auto y = forward(model, x);
    total += cross_entropy<float>(y.data, t.data) * static_cast<double>(idx.size());
  }
  return total / static_cast<double>(instances.size());
}

Checkpoint run_loop(const Model& initial, std::span<const TrainingInstance> train_set,
                    std::span<const TrainingInstance> val_set, const TrainConfig& config,
                    const StftConfig& stft_config, std::size_t epochs, const std::string& stage,
                    const Checkpoint* resume, const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.empty() || val_set.empty())
    throw std::invalid_argument(stage + ": training and validation sets must be non-empty");

  Checkpoint cp;
  if (resume) {
    if (resume->stage != stage) throw InvalidState("cannot resume a " + resume->stage + " checkpoint as " + stage);
    if (resume->seed != config.seed) throw InvalidState("resume: checkpoint seed differs from the config seed");
    cp = *resume;
  } else {
    cp.stage = stage;
    cp.stft = stft_config;
    cp.seed = config.seed;
    cp.best = initial;
    cp.current = initial;
    cp.epoch = 0;
    cp.best_epoch = 0;
    cp.best_val_loss = instances_loss(initial, val_set, config);
    cp.history.push_back({0, instances_loss(initial, train_set, config), cp.best_val_loss});
    spdlog::info("{} epoch 0: train {:.6f} val {:.6f}", stage, cp.history[0].train_loss, cp.best_val_loss);
    if (on_epoch) on_epoch(cp);
  }

  const NetworkGeometry g = cp.current.geometry();
  std::vector<std::size_t> order(train_set.size());
  while (cp.epoch < epochs) {
    const std::size_t epoch = cp.epoch + 1;
    std::iota(order.begin(), order.end(), 0);
    auto shuffle_rng = make_stream(config.seed, stage + "/shuffle", {epoch});
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    Checkpoint next = cp;
    double loss_sum = 0.0;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_no) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::span<const std::size_t> idx(order.data() + start, end - start);
      const auto x = gather_inputs(train_set, idx, g);
      const auto t = gather_targets(train_set, idx, g, config.smooth_lo, config.smooth_hi);
      auto dropout_rng = make_stream(config.seed, stage + "/dropout", {epoch, batch_no});
      ForwardCache<float> cache;
      const auto y = forward(next.current, x, true, cache, &dropout_rng);
      const double loss = cross_entropy<float>(y.data, t.data);
      if (!std::isfinite(loss))
        throw TrainingAborted(stage + ": non-finite training loss in epoch " + std::to_string(epoch) +
                                  ", batch " + std::to_string(batch_no),
                              cp);
      const auto grads = backward(next.current, cache, t);
      try {
        adam_step(next.current.params(), grads, next.adam, config.adam);
      } catch (const OptimizerError& e) {
        throw TrainingAborted(stage + ": " + e.what() + " in epoch " + std::to_string(epoch), cp);
      }
      loss_sum += loss * static_cast<double>(idx.size());
    }

    const double train_loss = loss_sum / static_cast<double>(order.size());
    const double val_loss = instances_loss(next.current, val_set, config);
    if (!std::isfinite(val_loss))
      throw TrainingAborted(stage + ": non-finite validation loss in epoch " + std::to_string(epoch), cp);
    next.epoch = epoch;
    next.history.push_back({epoch, train_loss, val_loss});
    if (val_loss < next.best_val_loss) {
      next.best_val_loss = val_loss;
      next.best_epoch = epoch;
      next.best = next.current;
    }
    cp = std::move(next);
    spdlog::info("{} epoch {}: train {:.6f} val {:.6f}{}", stage, epoch, train_loss, val_loss,
                 cp.best_epoch == epoch ? " (best)" : "");
    if (on_epoch) on_epoch(cp);
  }
  return cp;
}

}  // namespace

InstanceSet make_instances(std::span<const ClipStems> clips, const StftConfig& config,
                           std::size_t hop_frames, std::uint64_t seed) {
  return build_instances(clips, config, hop_frames, seed, true,
                         [](const ChannelSpectra& cs, TrainingInstance& inst) {
                           copy_excerpt(cs.mixture.magnitude, inst.origin, std::span(inst.input));
                           const auto ibm = ideal_binary_mask(cs.voice.magnitude, cs.accompaniment.magnitude);
                           copy_excerpt(ibm.bits, inst.origin, std::span(inst.label));
                         });
}

InstanceSet make_pretrain_instances(std::span<const ClipStems> clips, const StftConfig& config,
                                    std::size_t hop_frames, std::uint64_t seed,
                                    PretrainTarget target) {
  return build_instances(clips, config, hop_frames, seed, false,
                         [target](const ChannelSpectra& cs, TrainingInstance& inst) {
                           copy_excerpt(cs.voice.magnitude, inst.origin, std::span(inst.input));
                           if (target == PretrainTarget::kVoiceActivity) {
                             for (std::size_t i = 0; i < inst.input.size(); ++i)
                               inst.label[i] = inst.input[i] > 0.0f ? 1.0f : 0.0f;
                           } else {
                             const float peak = *std::max_element(inst.input.begin(), inst.input.end());
                             for (std::size_t i = 0; i < inst.input.size(); ++i)
                               inst.label[i] = peak > 0.0f ? inst.input[i] / peak : 0.0f;
                           }
                         });
}

std::vector<float> smooth_targets(std::span<const float> label, double lo, double hi) {
  if (!(lo >= 0.0 && lo < hi && hi <= 1.0))
    throw std::invalid_argument("smooth_targets: need 0 <= lo < hi <= 1");
  std::vector<float> out(label.size());
  for (std::size_t i = 0; i < label.size(); ++i) {
    if (label[i] == 0.0f) {
      out[i] = static_cast<float>(lo);
    } else if (label[i] == 1.0f) {
      out[i] = static_cast<float>(hi);
    } else {
      throw std::invalid_argument("smooth_targets: labels must be 0 or 1");
    }
  }
  return out;
}

template <typename S>
void adam_step(std::vector<ParamTensor<S>>& params, const Gradients& grads, AdamState& state,
               const AdamHyper& hyper) {
  if (grads.size() != params.size()) throw std::invalid_argument("adam_step: gradient count mismatch");
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (grads[p].size() != params[p].values.size())
      throw std::invalid_argument("adam_step: gradient shape mismatch for " + params[p].name);
    for (double g : grads[p])
      if (!std::isfinite(g)) throw OptimizerError(params[p].name, "non-finite gradient in " + params[p].name);
  }
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.values.size(), 0.0f);
      state.v.emplace_back(p.values.size(), 0.0f);
    }
  }
  if (state.m.size() != params.size()) throw std::invalid_argument("adam_step: state does not match parameters");

  const auto t = static_cast<double>(++state.step);
  const double c1 = 1.0 - std::pow(hyper.beta1, t);
  const double c2 = 1.0 - std::pow(hyper.beta2, t);
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& w = params[p].values;
    auto& m = state.m[p];
    auto& v = state.v[p];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double g = grads[p][i];
      const double mi = hyper.beta1 * static_cast<double>(m[i]) + (1.0 - hyper.beta1) * g;
      const double vi = hyper.beta2 * static_cast<double>(v[i]) + (1.0 - hyper.beta2) * g * g;
      m[i] = static_cast<float>(mi);
      v[i] = static_cast<float>(vi);
      const double step = hyper.learning_rate * (mi / c1) / (std::sqrt(vi / c2) + hyper.epsilon);
      w[i] = static_cast<S>(static_cast<double>(w[i]) - step);
    }
  }
}

template void adam_step(std::vector<ParamTensor<float>>&, const Gradients&, AdamState&, const AdamHyper&);
template void adam_step(std::vector<ParamTensor<double>>&, const Gradients&, AdamState&, const AdamHyper&);

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (hop_frames < 1) throw std::invalid_argument("TrainConfig: hop_frames must be >= 1");
  if (!(smooth_lo >= 0.0 && smooth_lo < smooth_hi && smooth_hi <= 1.0))
    throw std::invalid_argument("TrainConfig: need 0 <= smooth_lo < smooth_hi <= 1");
  if (!(adam.learning_rate > 0.0) || !(adam.beta1 >= 0.0 && adam.beta1 < 1.0) ||
      !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) || !(adam.epsilon > 0.0))
    throw std::invalid_argument("TrainConfig: invalid Adam hyper-parameters");
}

double evaluate_loss(const Model& model, std::span<const TrainingInstance> instances,
                     const TrainConfig& config) {
  config.validate();
  if (instances.empty()) throw std::invalid_argument("evaluate_loss: no instances");
  return instances_loss(model, instances, config);
}

Checkpoint train(const Model& initial, std::span<const TrainingInstance> train_set,
                 std::span<const TrainingInstance> val_set, const TrainConfig& config,
                 const StftConfig& stft, const Checkpoint* resume, const EpochCallback& on_epoch) {
  return run_loop(initial, train_set, val_set, config, stft, config.epochs, "train", resume, on_epoch);
}

Checkpoint pretrain_autoencoder(const Model& initial, std::span<const TrainingInstance> voice_train,
                                std::span<const TrainingInstance> voice_val,
                                const TrainConfig& config, const StftConfig& stft,
                                const Checkpoint* resume, const EpochCallback& on_epoch) {
  if (voice_train.empty() || voice_val.empty())
    throw std::invalid_argument("pretrain_autoencoder: empty excerpt set");
  return run_loop(initial, voice_train, voice_val, config, stft, config.pretrain_epochs, "pretrain",
                  resume, on_epoch);
}

std::vector<double> default_threshold_grid() {
  std::vector<double> grid;
  for (int k = 0; k <= 10; ++k) grid.push_back(k / 20.0);
  return grid;
}

}  // namespace svsep
