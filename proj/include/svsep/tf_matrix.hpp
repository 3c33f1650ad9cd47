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

/// Time-frequency matrix addressed as (bin, frame). Storage is frame-major:
/// the F bins of one frame are contiguous.
template <typename T>
class TfMatrix {
 public:
  TfMatrix() = default;
  TfMatrix(std::size_t bins, std::size_t frames, T fill = T{})
      : bins_(bins), frames_(frames), data_(bins * frames, fill) {}

  std::size_t bins() const noexcept { return bins_; }
  std::size_t frames() const noexcept { return frames_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t bin, std::size_t frame) { return data_[frame * bins_ + bin]; }
  const T& operator()(std::size_t bin, std::size_t frame) const {
    return data_[frame * bins_ + bin];
  }

  std::span<T> frame(std::size_t t) { return {data_.data() + t * bins_, bins_}; }
  std::span<const T> frame(std::size_t t) const { return {data_.data() + t * bins_, bins_}; }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }

  template <typename U>
  bool same_shape(const TfMatrix<U>& other) const noexcept {
    return bins_ == other.bins() && frames_ == other.frames();
  }

  friend bool operator==(const TfMatrix&, const TfMatrix&) = default;

 private:
  std::size_t bins_ = 0;
  std::size_t frames_ = 0;
  std::vector<T> data_;
};

}  // namespace svsep
