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


#ifndef NCDEREV_CONVOLVE_H_
#define NCDEREV_CONVOLVE_H_

#include <span>
#include <vector>

#include "ncderev/audio_io.h"

namespace ncderev {

// Full linear convolution via zero-padded FFTs; output length is
// x.size() + h.size() - 1 (empty if either input is empty).
std::vector<double> ConvolveFull(std::span<const double> x,
                                 std::span<const double> h);

// Throws ConfigError when the sample rates differ.
Waveform Convolve(const Waveform& x, const Waveform& kernel);

}  // namespace ncderev

#endif  // NCDEREV_CONVOLVE_H_
