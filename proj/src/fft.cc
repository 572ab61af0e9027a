// Copyright 2026 The ncderev Authors
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


#include "ncderev/fft.h"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <mutex>

#include "ncderev/error.h"

namespace ncderev {

namespace {
// FFTW planning touches global state.
std::mutex& PlannerMutex() {
  static std::mutex mu;
  return mu;
}
}  // namespace

RealFft::RealFft(size_t size) : size_(size) {
  if (size < 2) throw ConfigError("FFT size must be at least 2");
  std::lock_guard lock(PlannerMutex());
  real_ = fftw_alloc_real(size_);
  auto* spectrum = fftw_alloc_complex(num_bins());
  spectrum_ = spectrum;
  const int n = static_cast<int>(size_);
  forward_plan_ = fftw_plan_dft_r2c_1d(n, real_, spectrum, FFTW_ESTIMATE);
  inverse_plan_ = fftw_plan_dft_c2r_1d(n, spectrum, real_, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard lock(PlannerMutex());
  fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
  fftw_free(real_);
  fftw_free(spectrum_);
}

void RealFft::Forward(std::span<const double> input,
                      std::span<std::complex<double>> output) {
  if (input.size() > size_ || output.size() != num_bins()) {
    throw DataError("RealFft::Forward: buffer size mismatch");
  }
  std::copy(input.begin(), input.end(), real_);
  std::fill(real_ + input.size(), real_ + size_, 0.0);
  fftw_execute(static_cast<fftw_plan>(forward_plan_));
  std::memcpy(output.data(), spectrum_, num_bins() * sizeof(fftw_complex));
}

void RealFft::Inverse(std::span<const std::complex<double>> input,
                      std::span<double> output) {
  if (input.size() != num_bins() || output.size() != size_) {
    throw DataError("RealFft::Inverse: buffer size mismatch");
  }
  // c2r destroys its input, so the caller's spectrum is copied in first.
  std::memcpy(spectrum_, input.data(), num_bins() * sizeof(fftw_complex));
  fftw_execute(static_cast<fftw_plan>(inverse_plan_));
  std::copy(real_, real_ + size_, output.begin());
}

bool IsPowerOfTwo(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

size_t NextPowerOfTwo(size_t n) {
  size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace ncderev
