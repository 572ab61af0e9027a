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


#include "ncderev/features.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>

#include "binary_io.h"
#include "ncderev/error.h"

namespace ncderev {

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterBank MakeMelBank(size_t fft_size, int sample_rate, int n_mels) {
  if (n_mels < 1) throw ConfigError("n_mels must be >= 1");
  if (fft_size < 2 * static_cast<size_t>(n_mels)) {
    throw ConfigError("fft_size " + std::to_string(fft_size) +
                      " too small for " + std::to_string(n_mels) + " mel filters");
  }
  if (sample_rate <= 0) throw ConfigError("sample_rate must be positive");
  MelFilterBank bank;
  bank.n_mels = n_mels;
  bank.fft_size = fft_size;
  bank.sample_rate = sample_rate;
  const double nyquist = sample_rate / 2.0;
  const double top = HzToMel(nyquist);
  std::vector<double> edges(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i) edges[i] = MelToHz(top * i / (n_mels + 1));
  bank.center_hz.assign(edges.begin() + 1, edges.end() - 1);

  const size_t bins = bank.num_bins();
  const double bin_hz = static_cast<double>(sample_rate) / fft_size;
  bank.weights = Eigen::MatrixXd::Zero(n_mels, static_cast<Eigen::Index>(bins));
  for (int m = 0; m < n_mels; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (size_t b = 0; b < bins; ++b) {
      const double f = b * bin_hz;
      double w = 0.0;
      if (f > lo && f <= mid) w = (f - lo) / (mid - lo);
      else if (f > mid && f < hi) w = (hi - f) / (hi - mid);
      bank.weights(m, static_cast<Eigen::Index>(b)) = w;
    }
    if (bank.weights.row(m).maxCoeff() <= 0.0) {
      throw ConfigError("mel filter " + std::to_string(m) + " covers no FFT bin");
    }
  }
  return bank;
}

FeatureMatrix LogMel(const ComplexSpectrogram& spec, const MelFilterBank& bank,
                     EnergyFloor floor) {
  if (spec.bins() != bank.num_bins()) {
    throw DataError("spectrogram has " + std::to_string(spec.bins()) +
                    " bins, filter bank expects " + std::to_string(bank.num_bins()));
  }
  if (!(floor.value > 0.0)) throw ConfigError("energy floor must be positive");
  const auto frames = static_cast<Eigen::Index>(spec.frames());
  Eigen::MatrixXd power(frames, static_cast<Eigen::Index>(spec.bins()));
  for (Eigen::Index n = 0; n < frames; ++n) {
    for (Eigen::Index b = 0; b < power.cols(); ++b) power(n, b) = std::norm(spec.at(n, b));
  }
  FeatureMatrix energy = power * bank.weights.transpose();
  double limit = floor.value;
  if (floor.relative) {
    const double peak = energy.size() > 0 ? energy.maxCoeff() : 0.0;
    limit = peak > 0.0 ? floor.value * peak : std::numeric_limits<double>::min();
  }
  return energy.unaryExpr([limit](double e) { return std::log(std::max(limit, e)); });
}

FeatureMatrix Mvn(const FeatureMatrix& features) {
  if (features.rows() < 2) {
    throw DataError("mean/variance normalization needs at least 2 frames, got " +
                    std::to_string(features.rows()));
  }
  FeatureMatrix out = features;
  const double n = static_cast<double>(features.rows());
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    auto col = out.col(c);
    col.array() -= col.sum() / n;
    const double var = col.squaredNorm() / n;
    if (var >= 1e-12) col /= std::sqrt(var);
  }
  return out;
}

FeatureMatrix StackContext(const FeatureMatrix& features, int p, int q) {
  if (p < 0 || q < 0) throw ConfigError("context sizes must be non-negative");
  const Eigen::Index rows = features.rows(), dim = features.cols();
  FeatureMatrix out = FeatureMatrix::Zero(rows, (p + q + 1) * dim);
  for (Eigen::Index n = 0; n < rows; ++n) {
    for (int j = 0; j <= p + q; ++j) {
      const Eigen::Index src = n - p + j;
      if (src < 0 || src >= rows) continue;
      out.block(n, j * dim, 1, dim) = features.row(src);
    }
  }
  return out;
}

std::pair<FeatureMatrix, FeatureMatrix> AlignPairs(const FeatureMatrix& reverb,
                                                   const FeatureMatrix& clean) {
  if (clean.rows() > reverb.rows()) {
    throw DataError("clean sequence (" + std::to_string(clean.rows()) +
                    " frames) longer than reverberant (" +
                    std::to_string(reverb.rows()) + " frames)");
  }
  if (clean.cols() != reverb.cols()) throw DataError("feature dimensions differ");
  return {reverb.topRows(clean.rows()), clean};
}

FeatureMatrix ExtractFeatures(const Waveform& wave, const StftConfig& config,
                              const MelFilterBank& bank, EnergyFloor floor) {
  return Mvn(LogMel(Stft(wave, config), bank, floor));
}

void WriteFeatures(const FeatureMatrix& features, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  internal::WriteMagic(out, "NCFT");
  internal::WriteLE<uint32_t>(out, static_cast<uint32_t>(features.rows()));
  internal::WriteLE<uint32_t>(out, static_cast<uint32_t>(features.cols()));
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    for (Eigen::Index c = 0; c < features.cols(); ++c) {
      internal::WriteLE<float>(out, static_cast<float>(features(r, c)));
    }
  }
  if (!out) throw DataError("write failed: " + path.string());
}

FeatureMatrix ReadFeatures(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path.string());
  internal::ExpectMagic(in, "NCFT");
  const auto rows = internal::ReadLE<uint32_t>(in);
  const auto cols = internal::ReadLE<uint32_t>(in);
  FeatureMatrix out(rows, cols);
  for (uint32_t r = 0; r < rows; ++r) {
    for (uint32_t c = 0; c < cols; ++c) out(r, c) = internal::ReadLE<float>(in);
  }
  return out;
}

void WriteFeatureCsv(const FeatureMatrix& features, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  char buf[32];
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    for (Eigen::Index c = 0; c < features.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.9g", features(r, c));
      if (c > 0) out << ',';
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace ncderev
