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

#include "fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <mutex>
#include <stdexcept>

namespace svsep::detail {

namespace {

// FFTW planning touches global state; execution on distinct plans does not.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct RealFft::Plans {
  double* real = nullptr;
  fftw_complex* spectrum = nullptr;
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;

  ~Plans() {
    std::lock_guard lock(planner_mutex());
    if (r2c) fftw_destroy_plan(r2c);
    if (c2r) fftw_destroy_plan(c2r);
    fftw_free(real);
    fftw_free(spectrum);
  }
};

RealFft::RealFft(std::size_t size) : size_(size), plans_(std::make_unique<Plans>()) {
  if (size < 2) throw std::invalid_argument("RealFft: size must be at least 2");
  std::lock_guard lock(planner_mutex());
  plans_->real = fftw_alloc_real(size);
  plans_->spectrum = fftw_alloc_complex(size / 2 + 1);
  if (!plans_->real || !plans_->spectrum) throw std::bad_alloc();
  const int n = static_cast<int>(size);
  plans_->r2c = fftw_plan_dft_r2c_1d(n, plans_->real, plans_->spectrum, FFTW_ESTIMATE);
  plans_->c2r = fftw_plan_dft_c2r_1d(n, plans_->spectrum, plans_->real, FFTW_ESTIMATE);
  if (!plans_->r2c || !plans_->c2r) throw std::runtime_error("RealFft: planning failed");
}

RealFft::~RealFft() = default;
RealFft::RealFft(RealFft&&) noexcept = default;
RealFft& RealFft::operator=(RealFft&&) noexcept = default;

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) {
  if (in.size() > size_ || out.size() != bins())
    throw std::invalid_argument("RealFft::forward: bad buffer sizes");
  std::copy(in.begin(), in.end(), plans_->real);
  std::fill(plans_->real + in.size(), plans_->real + size_, 0.0);
  fftw_execute(plans_->r2c);
  for (std::size_t k = 0; k < bins(); ++k) out[k] = {plans_->spectrum[k][0], plans_->spectrum[k][1]};
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) {
  if (in.size() != bins() || out.size() != size_)
    throw std::invalid_argument("RealFft::inverse: bad buffer sizes");
  // c2r destroys its input, so it always runs on the internal copy.
  std::memcpy(plans_->spectrum, in.data(), bins() * sizeof(fftw_complex));
  fftw_execute(plans_->c2r);
  std::copy(plans_->real, plans_->real + size_, out.begin());
}

std::size_t fast_fft_size(std::size_t n) {
  std::size_t best = 1;
  while (best < n) best *= 2;
  for (std::size_t p5 = 1; p5 < best; p5 *= 5) {
    for (std::size_t p35 = p5; p35 < best; p35 *= 3) {
      std::size_t v = p35;
      while (v < n) v *= 2;
      best = std::min(best, v);
    }
  }
  return best;
}

}  // namespace svsep::detail
