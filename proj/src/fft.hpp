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

#include <complex>
#include <cstddef>
#include <memory>
#include <span>

namespace svsep::detail {

/// Real-input FFT of a fixed size backed by FFTW. One instance must not be
/// used from two threads at once; create one per thread instead.
class RealFft {
 public:
  explicit RealFft(std::size_t size);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
  RealFft(RealFft&&) noexcept;
  RealFft& operator=(RealFft&&) noexcept;

  std::size_t size() const noexcept { return size_; }
  std::size_t bins() const noexcept { return size_ / 2 + 1; }

  /// `in` may be shorter than size(); the tail is zero-filled.
  void forward(std::span<const double> in, std::span<std::complex<double>> out);

  /// Unnormalized inverse: the result is size() times the true inverse.
  void inverse(std::span<const std::complex<double>> in, std::span<double> out);

 private:
  struct Plans;
  std::size_t size_;
  std::unique_ptr<Plans> plans_;
};

/// Smallest size >= n of the form 2^a 3^b 5^c.
std::size_t fast_fft_size(std::size_t n);

}  // namespace svsep::detail
