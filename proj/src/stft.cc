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


#include "ncderev/stft.h"

#include <cmath>
#include <fstream>
#include <numbers>

#include "binary_io.h"
#include "ncderev/error.h"
#include "ncderev/fft.h"

namespace ncderev {

std::vector<double> MakeWindow(WindowType type, size_t length) {
  std::vector<double> w(length);
  const double step = 2.0 * std::numbers::pi / static_cast<double>(length);
  for (size_t i = 0; i < length; ++i) {
    const double c = std::cos(step * static_cast<double>(i));
    w[i] = type == WindowType::kHann ? 0.5 - 0.5 * c : 0.54 - 0.46 * c;
  }
  return w;
}

WindowType ParseWindowType(const std::string& name) {
  if (name == "hann") return WindowType::kHann;
  if (name == "hamming") return WindowType::kHamming;
  throw ConfigError("unknown window: " + name);
}

std::string WindowName(WindowType type) {
  return type == WindowType::kHann ? "hann" : "hamming";
}

StftConfig StftConfig::ForSampleRate(int sample_rate) {
  if (sample_rate <= 0) throw ConfigError("sample rate must be positive");
  StftConfig config;
  config.frame_len = static_cast<size_t>(std::lround(0.025 * sample_rate));
  config.frame_shift = static_cast<size_t>(std::lround(0.010 * sample_rate));
  config.fft_size = NextPowerOfTwo(config.frame_len);
  return config;
}

void StftConfig::Validate() const {
  if (frame_shift == 0 || frame_shift > frame_len || frame_len > fft_size) {
    throw ConfigError("STFT config requires 0 < frame_shift <= frame_len <= "
                      "fft_size");
  }
  if (!IsPowerOfTwo(fft_size)) {
    throw ConfigError("fft_size must be a power of two, got " +
                      std::to_string(fft_size));
  }
}

size_t StftConfig::NumFrames(size_t num_samples) const {
  if (num_samples < frame_len) return 0;
  return 1 + (num_samples - frame_len) / frame_shift;
}

ComplexSpectrogram::ComplexSpectrogram(size_t frames, size_t bins,
                                       StftConfig config, int sample_rate)
    : frames_(frames),
      bins_(bins),
      config_(config),
      sample_rate_(sample_rate),
      values_(frames * bins) {}

std::vector<std::complex<double>> ComplexSpectrogram::Trajectory(
    size_t k) const {
  std::vector<std::complex<double>> out(frames_);
  for (size_t n = 0; n < frames_; ++n) out[n] = at(n, k);
  return out;
}

void ComplexSpectrogram::SetTrajectory(
    size_t k, std::span<const std::complex<double>> values) {
  if (values.size() != frames_ || k >= bins_) {
    throw DataError("SetTrajectory: shape mismatch");
  }
  for (size_t n = 0; n < frames_; ++n) at(n, k) = values[n];
}

ComplexSpectrogram ComplexSpectrogram::Truncated(size_t frames) const {
  if (frames > frames_) throw DataError("Truncated: not enough frames");
  ComplexSpectrogram out(frames, bins_, config_, sample_rate_);
  std::copy(values_.begin(),
            values_.begin() + static_cast<std::ptrdiff_t>(frames * bins_),
            out.values_.begin());
  return out;
}

ComplexSpectrogram Stft(const Waveform& wave, const StftConfig& config) {
  config.Validate();
  const size_t frames = config.NumFrames(wave.size());
  if (frames == 0) {
    throw DataError("waveform of " + std::to_string(wave.size()) +
                    " samples is shorter than one frame (" +
                    std::to_string(config.frame_len) + ")");
  }
  const std::vector<double> window = MakeWindow(config.window, config.frame_len);
  ComplexSpectrogram spec(frames, config.num_bins(), config, wave.sample_rate);
  RealFft fft(config.fft_size);
  std::vector<double> buffer(config.frame_len);
  for (size_t n = 0; n < frames; ++n) {
    const double* src = wave.samples.data() + n * config.frame_shift;
    for (size_t i = 0; i < config.frame_len; ++i) buffer[i] = src[i] * window[i];
    fft.Forward(buffer, spec.frame(n));
  }
  return spec;
}

Waveform Istft(const ComplexSpectrogram& spec) {
  const StftConfig& config = spec.config();
  config.Validate();
  if (spec.bins() != config.num_bins()) {
    throw ConfigError("spectrogram has " + std::to_string(spec.bins()) +
                      " bins but config implies " +
                      std::to_string(config.num_bins()));
  }
  Waveform out;
  out.sample_rate = spec.sample_rate();
  if (spec.frames() == 0) return out;

  const size_t length = (spec.frames() - 1) * config.frame_shift + config.frame_len;
  out.samples.assign(length, 0.0);
  std::vector<double> norm(length, 0.0);
  const std::vector<double> window = MakeWindow(config.window, config.frame_len);
  RealFft fft(config.fft_size);
  std::vector<double> buffer(config.fft_size);
  const double scale = 1.0 / static_cast<double>(config.fft_size);
  for (size_t n = 0; n < spec.frames(); ++n) {
    fft.Inverse(spec.frame(n), buffer);
    const size_t offset = n * config.frame_shift;
    for (size_t i = 0; i < config.frame_len; ++i) {
      out.samples[offset + i] += buffer[i] * scale * window[i];
      norm[offset + i] += window[i] * window[i];
    }
  }
  for (size_t i = 0; i < length; ++i) {
    out.samples[i] = norm[i] > 1e-10 ? out.samples[i] / norm[i] : 0.0;
  }
  return out;
}

void WriteSpectrogram(const ComplexSpectrogram& spec,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  internal::WriteMagic(out, "NCSP");
  internal::WriteLE<uint32_t>(out, static_cast<uint32_t>(spec.frames()));
  internal::WriteLE<uint32_t>(out, static_cast<uint32_t>(spec.bins()));
  for (const auto& v : spec.values()) {
    internal::WriteLE<float>(out, static_cast<float>(v.real()));
    internal::WriteLE<float>(out, static_cast<float>(v.imag()));
  }
  if (!out) throw DataError("write failed: " + path.string());
}

ComplexSpectrogram ReadSpectrogram(const std::filesystem::path& path,
                                   const StftConfig& config, int sample_rate) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open spectrogram: " + path.string());
  internal::ExpectMagic(in, "NCSP");
  const auto frames = internal::ReadLE<uint32_t>(in);
  const auto bins = internal::ReadLE<uint32_t>(in);
  ComplexSpectrogram spec(frames, bins, config, sample_rate);
  for (size_t n = 0; n < frames; ++n) {
    for (auto& v : spec.frame(n)) {
      const float re = internal::ReadLE<float>(in);
      const float im = internal::ReadLE<float>(in);
      v = {re, im};
    }
  }
  return spec;
}

}  // namespace ncderev
