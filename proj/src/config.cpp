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

#include "svsep/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "svsep/error.hpp"

namespace svsep {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end)
    throw std::invalid_argument("setting '" + std::string(key) + "': cannot parse '" + std::string(text) + "'");
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw std::invalid_argument("setting '" + std::string(key) + "': expected true or false");
}

std::vector<std::size_t> parse_list(std::string_view key, std::string_view text, char sep) {
  std::vector<std::size_t> out;
  while (true) {
    const auto pos = text.find(sep);
    out.push_back(parse_number<std::size_t>(key, trim(text.substr(0, pos))));
    if (pos == std::string_view::npos) break;
    text.remove_prefix(pos + 1);
  }
  return out;
}

template <typename T>
std::string join(const std::vector<T>& v, char sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += std::to_string(v[i]);
  }
  return s;
}

std::string number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void RunConfig::validate() const {
  stft.validate();
  geometry.validate();
  if (geometry.bins != stft.bins()) throw std::invalid_argument("config: network bins differ from the STFT bins");
  train.validate();
  if (!(theta >= 0.0 && theta <= 1.0)) throw std::invalid_argument("config: theta must lie in [0, 1]");
  if (filter_length < 1) throw std::invalid_argument("config: filter_length must be >= 1");
}

void apply_setting(RunConfig& c, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos)
    throw std::invalid_argument("setting '" + std::string(assignment) + "': expected key=value");
  const auto key = trim(assignment.substr(0, eq));
  const auto value = trim(assignment.substr(eq + 1));
  auto size = [&] { return parse_number<std::size_t>(key, value); };
  auto real = [&] { return parse_number<double>(key, value); };
  auto integer = [&] { return parse_number<int>(key, value); };

  if (key == "seed") c.train.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "epochs") c.train.epochs = size();
  else if (key == "batch_size") c.train.batch_size = size();
  else if (key == "learning_rate") c.train.adam.learning_rate = real();
  else if (key == "beta1") c.train.adam.beta1 = real();
  else if (key == "beta2") c.train.adam.beta2 = real();
  else if (key == "epsilon") c.train.adam.epsilon = real();
  else if (key == "smooth_lo") c.train.smooth_lo = real();
  else if (key == "smooth_hi") c.train.smooth_hi = real();
  else if (key == "pretrain_epochs") c.train.pretrain_epochs = size();
  else if (key == "pretrain_target") {
    if (value == "voice_activity") c.train.pretrain_target = PretrainTarget::kVoiceActivity;
    else if (value == "magnitude") c.train.pretrain_target = PretrainTarget::kMagnitude;
    else throw std::invalid_argument("setting 'pretrain_target': expected voice_activity or magnitude");
  } else if (key == "hop_frames") c.train.hop_frames = size();
  else if (key == "window_size") c.stft.window_size = integer();
  else if (key == "hop_size") c.stft.hop_size = integer();
  else if (key == "fft_size") c.stft.fft_size = integer();
  else if (key == "sample_rate") c.stft.sample_rate = integer();
  else if (key == "geometry") {
    if (value == "full") c.geometry = NetworkGeometry::full();
    else if (value == "tiny") c.geometry = fixture_config().geometry;
    else throw std::invalid_argument("setting 'geometry': expected full or tiny");
  } else if (key == "kernel_time") c.geometry.kernel_time = size();
  else if (key == "kernel_freq") c.geometry.kernel_freq = size();
  else if (key == "conv_stages") {
    c.geometry.conv_stages.clear();
    std::string_view rest = value;
    while (true) {
      const auto pos = rest.find(';');
      c.geometry.conv_stages.push_back(parse_list(key, rest.substr(0, pos), ','));
      if (pos == std::string_view::npos) break;
      rest.remove_prefix(pos + 1);
    }
  } else if (key == "pool_width") c.geometry.pool_width = size();
  else if (key == "hidden") c.geometry.hidden = parse_list(key, value, ',');
  else if (key == "dropout") c.geometry.dropout = real();
  else if (key == "theta") c.theta = real();
  else if (key == "sweep") c.sweep = parse_bool(key, value);
  else if (key == "filter_length") c.filter_length = size();
  else throw std::invalid_argument("unknown setting '" + std::string(key) + "'");
  c.geometry.bins = c.stft.bins();
}

RunConfig parse_config(std::string_view text, const std::string& origin) {
  RunConfig c;
  c.geometry.bins = c.stft.bins();
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      apply_setting(c, line);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

std::string format_config(const RunConfig& c) {
  std::vector<std::string> stages;
  for (const auto& s : c.geometry.conv_stages) stages.push_back(join(s, ','));
  std::string conv;
  for (std::size_t i = 0; i < stages.size(); ++i) conv += (i ? ";" : "") + stages[i];

  std::ostringstream o;
  o << "# stft\n"
    << "sample_rate = " << c.stft.sample_rate << "\n"
    << "window_size = " << c.stft.window_size << "\n"
    << "hop_size = " << c.stft.hop_size << "\n"
    << "fft_size = " << c.stft.fft_size << "\n"
    << "# network\n"
    << "kernel_time = " << c.geometry.kernel_time << "\n"
    << "kernel_freq = " << c.geometry.kernel_freq << "\n"
    << "conv_stages = " << conv << "\n"
    << "pool_width = " << c.geometry.pool_width << "\n"
    << "hidden = " << join(c.geometry.hidden, ',') << "\n"
    << "dropout = " << number(c.geometry.dropout) << "\n"
    << "# training\n"
    << "seed = " << c.train.seed << "\n"
    << "epochs = " << c.train.epochs << "\n"
    << "batch_size = " << c.train.batch_size << "\n"
    << "hop_frames = " << c.train.hop_frames << "\n"
    << "learning_rate = " << number(c.train.adam.learning_rate) << "\n"
    << "beta1 = " << number(c.train.adam.beta1) << "\n"
    << "beta2 = " << number(c.train.adam.beta2) << "\n"
    << "epsilon = " << number(c.train.adam.epsilon) << "\n"
    << "smooth_lo = " << number(c.train.smooth_lo) << "\n"
    << "smooth_hi = " << number(c.train.smooth_hi) << "\n"
    << "pretrain_epochs = " << c.train.pretrain_epochs << "\n"
    << "pretrain_target = "
    << (c.train.pretrain_target == PretrainTarget::kVoiceActivity ? "voice_activity" : "magnitude") << "\n"
    << "# threshold\n"
    << "theta = " << number(c.theta) << "\n"
    << "sweep = " << (c.sweep ? "true" : "false") << "\n"
    << "filter_length = " << c.filter_length << "\n";
  return o.str();
}

RunConfig fixture_config() {
  RunConfig c;
  c.stft = {256, 64, 512, 8000};
  c.geometry.kernel_time = 3;
  c.geometry.kernel_freq = 5;
  c.geometry.conv_stages = {{4, 4}, {8, 8}};
  c.geometry.pool_width = 6;
  c.geometry.hidden = {64, 32};
  c.geometry.bins = c.stft.bins();
  c.train.batch_size = 32;
  c.train.epochs = 100;
  c.train.pretrain_epochs = 20;
  c.train.hop_frames = 4;
  c.filter_length = 256;
  return c;
}

}  // namespace svsep
