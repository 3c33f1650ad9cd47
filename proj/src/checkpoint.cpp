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

#include "svsep/checkpoint.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "binary_io.hpp"
#include "svsep/error.hpp"

namespace svsep {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'S', 'V', 'S', 'E', 'P', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_or(const json& j, double fallback) { return j.is_null() ? fallback : j.get<double>(); }

json geometry_json(const NetworkGeometry& g) {
  return {{"frames", g.frames},       {"bins", g.bins},           {"kernel_time", g.kernel_time},
          {"kernel_freq", g.kernel_freq}, {"conv_stages", g.conv_stages}, {"pool_width", g.pool_width},
          {"hidden", g.hidden},       {"dropout", g.dropout}};
}

NetworkGeometry geometry_from(const json& j) {
  NetworkGeometry g;
  g.frames = j.at("frames").get<std::size_t>();
  g.bins = j.at("bins").get<std::size_t>();
  g.kernel_time = j.at("kernel_time").get<std::size_t>();
  g.kernel_freq = j.at("kernel_freq").get<std::size_t>();
  g.conv_stages = j.at("conv_stages").get<std::vector<std::vector<std::size_t>>>();
  g.pool_width = j.at("pool_width").get<std::size_t>();
  g.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  g.dropout = j.at("dropout").get<double>();
  return g;
}

struct TensorRef {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<float>* data;
};

void add_model(std::vector<TensorRef>& refs, const std::string& prefix, Model& m) {
  for (auto& p : m.params()) refs.push_back({prefix + p.name, p.shape, &p.values});
}

// Same order on save and load.
std::vector<TensorRef> tensor_refs(Checkpoint& cp) {
  std::vector<TensorRef> refs;
  add_model(refs, "best/", cp.best);
  add_model(refs, "current/", cp.current);
  const auto& params = cp.current.params();
  if (!cp.adam.m.empty()) {
    for (std::size_t i = 0; i < params.size(); ++i) refs.push_back({"adam_m/" + params[i].name, params[i].shape, &cp.adam.m[i]});
    for (std::size_t i = 0; i < params.size(); ++i) refs.push_back({"adam_v/" + params[i].name, params[i].shape, &cp.adam.v[i]});
  }
  return refs;
}

}  // namespace

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  Checkpoint cp = checkpoint;
  const auto refs = tensor_refs(cp);
  json tensors = json::array();
  for (const auto& r : refs) tensors.push_back({{"name", r.name}, {"shape", r.shape}});
  json history = json::array();
  for (const auto& h : cp.history)
    history.push_back({h.epoch, finite_or_null(h.train_loss), finite_or_null(h.val_loss)});

  const json header = {
      {"stage", cp.stage},
      {"seed", cp.seed},
      {"stft",
       {{"window_size", cp.stft.window_size},
        {"hop_size", cp.stft.hop_size},
        {"fft_size", cp.stft.fft_size},
        {"sample_rate", cp.stft.sample_rate}}},
      {"theta", cp.theta},
      {"geometry", geometry_json(cp.current.geometry())},
      {"model_seed", {cp.best.seed(), cp.current.seed()}},
      {"epoch", cp.epoch},
      {"best_epoch", cp.best_epoch},
      {"best_val_loss", finite_or_null(cp.best_val_loss)},
      {"adam_step", cp.adam.step},
      {"history", history},
      {"tensors", tensors},
  };
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof(kMagic));
  detail::write_le<std::uint32_t>(out, kVersion);
  detail::write_le<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& r : refs) detail::write_floats(out, *r.data);
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw FormatError(path.string() + ": not a checkpoint");
  const auto version = detail::read_le<std::uint32_t>(in);
  if (version != kVersion) throw UnsupportedFormat(path.string() + ": unknown checkpoint version " + std::to_string(version));
  const auto size = detail::read_le<std::uint64_t>(in);
  if (!in || size > (std::uint64_t{1} << 30)) throw FormatError(path.string() + ": bad header size");
  std::string text(size, '\0');
  in.read(text.data(), static_cast<std::streamsize>(size));
  if (!in) throw FormatError(path.string() + ": truncated header");

  Checkpoint cp;
  std::vector<json> directory;
  try {
    const json h = json::parse(text);
    cp.stage = h.at("stage").get<std::string>();
    cp.seed = h.at("seed").get<std::uint64_t>();
    const auto& s = h.at("stft");
    cp.stft = {s.at("window_size").get<int>(), s.at("hop_size").get<int>(), s.at("fft_size").get<int>(),
               s.at("sample_rate").get<int>()};
    cp.theta = h.at("theta").get<double>();
    const auto g = geometry_from(h.at("geometry"));
    const auto seeds = h.at("model_seed").get<std::vector<std::uint64_t>>();
    if (seeds.size() != 2) throw FormatError("model_seed must hold two values");
    cp.best = Model(g, seeds[0]);
    cp.current = Model(g, seeds[1]);
    cp.epoch = h.at("epoch").get<std::size_t>();
    cp.best_epoch = h.at("best_epoch").get<std::size_t>();
    cp.best_val_loss = number_or(h.at("best_val_loss"), std::numeric_limits<double>::infinity());
    cp.adam.step = h.at("adam_step").get<std::uint64_t>();
    for (const auto& e : h.at("history"))
      cp.history.push_back({e.at(0).get<std::size_t>(), number_or(e.at(1), std::nan("")),
                            number_or(e.at(2), std::nan(""))});
    directory = h.at("tensors").get<std::vector<json>>();
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": bad header: " + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(path.string() + ": bad header: " + e.what());
  }

  const std::size_t n_params = cp.current.params().size();
  if (directory.size() != 2 * n_params && directory.size() != 4 * n_params)
    throw FormatError(path.string() + ": unexpected tensor count");
  if (directory.size() == 4 * n_params) {
    for (const auto& p : cp.current.params()) {
      cp.adam.m.emplace_back(p.values.size());
      cp.adam.v.emplace_back(p.values.size());
    }
  }
  const auto refs = tensor_refs(cp);
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const auto& d = directory[i];
    if (d.at("name").get<std::string>() != refs[i].name ||
        d.at("shape").get<std::vector<std::size_t>>() != refs[i].shape)
      throw FormatError(path.string() + ": tensor " + std::to_string(i) + " does not match the geometry");
    detail::read_floats(in, *refs[i].data);
    if (!in) throw FormatError(path.string() + ": truncated tensor " + refs[i].name);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError(path.string() + ": trailing data");
  return cp;
}

}  // namespace svsep
