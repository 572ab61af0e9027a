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


#ifndef NCDEREV_FEATURES_H_
#define NCDEREV_FEATURES_H_

#include <Eigen/Dense>

#include <filesystem>
#include <utility>
#include <vector>

#include "ncderev/stft.h"

namespace ncderev {

// Frames are rows. Log-Mel sequences have n_mels columns, context-stacked
// sequences (p + q + 1) * n_mels.
using FeatureMatrix = Eigen::MatrixXd;

inline constexpr int kDefaultMels = 40;

double HzToMel(double hz);
double MelToHz(double mel);

struct MelFilterBank {
  int n_mels = kDefaultMels;
  size_t fft_size = 512;
  int sample_rate = 16000;
  std::vector<double> center_hz;
  Eigen::MatrixXd weights;  // n_mels x (fft_size / 2 + 1), non-negative

  size_t num_bins() const { return fft_size / 2 + 1; }
};

// Triangular filters with Mel-spaced edges from 0 Hz to Nyquist, evaluated at
// the bin frequencies, peak height 1. Throws ConfigError unless
// n_mels >= 1 and fft_size >= 2 * n_mels.
MelFilterBank MakeMelBank(size_t fft_size, int sample_rate,
                          int n_mels = kDefaultMels);

// Lower bound on the filter energy before the logarithm. Relative floors are
// scaled by the largest filter energy of the utterance.
struct EnergyFloor {
  bool relative = true;
  double value = 1e-10;

  static EnergyFloor Absolute(double v) { return {false, v}; }
  static EnergyFloor Relative(double v) { return {true, v}; }
};

// log(max(floor, sum_b w(k, b) |X(n, b)|^2)). Throws DataError if the bank and
// the spectrogram disagree on the bin count, ConfigError on a floor <= 0.
FeatureMatrix LogMel(const ComplexSpectrogram& spec, const MelFilterBank& bank,
                     EnergyFloor floor = {});

// Per-column zero mean and unit (1/N) variance. Columns with variance below
// 1e-12 are only centered. Throws DataError for fewer than two frames.
FeatureMatrix Mvn(const FeatureMatrix& features);

// Row n is [x(n - p), ..., x(n), ..., x(n + q)] with zero rows outside the
// utterance.
FeatureMatrix StackContext(const FeatureMatrix& features, int p, int q);

// Truncates the reverberant sequence to the clean length. Throws DataError if
// the clean sequence is longer.
std::pair<FeatureMatrix, FeatureMatrix> AlignPairs(const FeatureMatrix& reverb,
                                                   const FeatureMatrix& clean);

// STFT, log-Mel and MVN in one go.
FeatureMatrix ExtractFeatures(const Waveform& wave, const StftConfig& config,
                              const MelFilterBank& bank, EnergyFloor floor = {});

// "NCFT": magic, u32 rows, u32 cols, row-major little-endian f32.
void WriteFeatures(const FeatureMatrix& features,
                   const std::filesystem::path& path);
FeatureMatrix ReadFeatures(const std::filesystem::path& path);
// One row per frame, %.9g, no header.
void WriteFeatureCsv(const FeatureMatrix& features,
                     const std::filesystem::path& path);

}  // namespace ncderev

#endif  // NCDEREV_FEATURES_H_
