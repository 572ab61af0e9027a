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


#ifndef NCDEREV_FFT_H_
#define NCDEREV_FFT_H_

#include <complex>
#include <cstddef>
#include <span>

namespace ncderev {

// Real-input FFT of a fixed size backed by FFTW. Owns its plans and aligned
// buffers, so repeated transforms of the same size are bit-reproducible.
// Not thread-safe; create one instance per thread.
class RealFft {
 public:
  explicit RealFft(size_t size);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  size_t size() const { return size_; }
  size_t num_bins() const { return size_ / 2 + 1; }

  // input.size() <= size(); the remainder is zero-padded.
  // output.size() == num_bins().
  void Forward(std::span<const double> input,
               std::span<std::complex<double>> output);

  // Unnormalized inverse: Inverse(Forward(x)) == size() * x.
  void Inverse(std::span<const std::complex<double>> input,
               std::span<double> output);

 private:
  size_t size_;
  double* real_ = nullptr;
  void* spectrum_ = nullptr;
  void* forward_plan_ = nullptr;
  void* inverse_plan_ = nullptr;
};

bool IsPowerOfTwo(size_t n);
size_t NextPowerOfTwo(size_t n);

}  // namespace ncderev

#endif  // NCDEREV_FFT_H_
