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


#include "ncderev/convolve.h"

#include <algorithm>
#include <complex>
#include <string>

#include "ncderev/error.h"
#include "ncderev/fft.h"

namespace ncderev {

std::vector<double> ConvolveFull(std::span<const double> x,
                                 std::span<const double> h) {
  if (x.empty() || h.empty()) return {};
  const size_t out_len = x.size() + h.size() - 1;
  RealFft fft(NextPowerOfTwo(std::max<size_t>(out_len, 2)));
  std::vector<std::complex<double>> fx(fft.num_bins());
  std::vector<std::complex<double>> fh(fft.num_bins());
  fft.Forward(x, fx);
  fft.Forward(h, fh);
  for (size_t i = 0; i < fx.size(); ++i) fx[i] *= fh[i];
  std::vector<double> full(fft.size());
  fft.Inverse(fx, full);
  const double scale = 1.0 / static_cast<double>(fft.size());
  std::vector<double> out(out_len);
  for (size_t i = 0; i < out_len; ++i) out[i] = full[i] * scale;
  return out;
}

Waveform Convolve(const Waveform& x, const Waveform& kernel) {
  if (x.sample_rate != kernel.sample_rate) {
    throw ConfigError("sample-rate mismatch: signal " +
                      std::to_string(x.sample_rate) + " Hz, kernel " +
                      std::to_string(kernel.sample_rate) + " Hz");
  }
  return Waveform{ConvolveFull(x.samples, kernel.samples), x.sample_rate};
}

}  // namespace ncderev
