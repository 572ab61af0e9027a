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


#ifndef NCDEREV_STFT_H_
#define NCDEREV_STFT_H_

#include <complex>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ncderev/audio_io.h"

namespace ncderev {

enum class WindowType { kHann, kHamming };

// Periodic window of the given length.
std::vector<double> MakeWindow(WindowType type, size_t length);
WindowType ParseWindowType(const std::string& name);
std::string WindowName(WindowType type);

struct StftConfig {
  size_t frame_len = 400;
  size_t frame_shift = 160;
  size_t fft_size = 512;
  WindowType window = WindowType::kHann;

  // 25 ms frames, 10 ms shift, FFT size the next power of two.
  static StftConfig ForSampleRate(int sample_rate);

  size_t num_bins() const { return fft_size / 2 + 1; }
  // Throws ConfigError unless frame_shift <= frame_len <= fft_size and
  // fft_size is a power of two.
  void Validate() const;
  // 1 + floor((len - frame_len) / frame_shift), or 0 if len < frame_len.
  size_t NumFrames(size_t num_samples) const;
};

// Frame-major N x K matrix of complex STFT values.
class ComplexSpectrogram {
 public:
  ComplexSpectrogram() = default;
  ComplexSpectrogram(size_t frames, size_t bins, StftConfig config,
                     int sample_rate);

  size_t frames() const { return frames_; }
  size_t bins() const { return bins_; }
  const StftConfig& config() const { return config_; }
  int sample_rate() const { return sample_rate_; }

  std::complex<double>& at(size_t n, size_t k) { return values_[n * bins_ + k]; }
  const std::complex<double>& at(size_t n, size_t k) const {
    return values_[n * bins_ + k];
  }
  std::span<std::complex<double>> frame(size_t n) {
    return {values_.data() + n * bins_, bins_};
  }
  std::span<const std::complex<double>> frame(size_t n) const {
    return {values_.data() + n * bins_, bins_};
  }
  const std::vector<std::complex<double>>& values() const { return values_; }

  // The sequence of bin k across all frames.
  std::vector<std::complex<double>> Trajectory(size_t k) const;
  void SetTrajectory(size_t k, std::span<const std::complex<double>> values);

  // Copy of the first `frames` frames.
  ComplexSpectrogram Truncated(size_t frames) const;

 private:
  size_t frames_ = 0;
  size_t bins_ = 0;
  StftConfig config_;
  int sample_rate_ = 16000;
  std::vector<std::complex<double>> values_;
};

// Frame n covers samples [n * shift, n * shift + frame_len); the trailing
// partial frame is dropped. Throws DataError if the waveform is shorter than
// one frame.
ComplexSpectrogram Stft(const Waveform& wave, const StftConfig& config);

// Weighted overlap-add: each frame is windowed again and the sum is divided
// by the summed squared window. Samples where that sum is ~0 are set to 0.
// Output length is (N - 1) * shift + frame_len.
Waveform Istft(const ComplexSpectrogram& spec);

// "NCSP" dump: magic, u32 N, u32 K, then N*K interleaved (re, im) f32,
// row-major, little-endian. Reading restores values rounded to f32; the
// config is not stored, so the reader takes it from the caller.
void WriteSpectrogram(const ComplexSpectrogram& spec,
                      const std::filesystem::path& path);
ComplexSpectrogram ReadSpectrogram(const std::filesystem::path& path,
                                   const StftConfig& config, int sample_rate);

}  // namespace ncderev

#endif  // NCDEREV_STFT_H_
