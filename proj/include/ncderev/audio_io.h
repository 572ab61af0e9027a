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


#ifndef NCDEREV_AUDIO_IO_H_
#define NCDEREV_AUDIO_IO_H_

#include <filesystem>
#include <vector>

namespace ncderev {

// Mono waveform. Samples are nominally in [-1, 1); 16-bit PCM is mapped by
// dividing by 32768.
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 16000;

  size_t size() const { return samples.size(); }
  double Duration() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// Reads a RIFF/WAVE file holding 16-bit little-endian mono PCM.
// Throws DataError for unreadable files, other encodings, or more than one
// channel.
Waveform ReadWav(const std::filesystem::path& path);

// Writes 16-bit mono PCM. Samples are rounded to the nearest code and clipped
// to [-32768, 32767]. Throws DataError on non-finite samples or I/O failure.
void WriteWav(const Waveform& wave, const std::filesystem::path& path);

}  // namespace ncderev

#endif  // NCDEREV_AUDIO_IO_H_
