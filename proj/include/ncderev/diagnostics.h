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


#ifndef NCDEREV_DIAGNOSTICS_H_
#define NCDEREV_DIAGNOSTICS_H_

#include <complex>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ncderev/features.h"
#include "ncderev/stft.h"

namespace ncderev {

// values[tau] for tau = 0 .. max_lag.
struct AutocorrCurve {
  std::vector<double> values;

  size_t max_lag() const { return values.empty() ? 0 : values.size() - 1; }
};

enum class AutocorrDomain { kComplex, kMagnitude };
AutocorrDomain ParseAutocorrDomain(const std::string& name);

// Mean-removed autocorrelation normalized by the energies of the two
// overlapping segments:
//   r(tau) = Re sum_n conj(s(n)) s(n + tau) / sqrt(E[0, N-tau) E[tau, N))
// so r(0) = 1, |r| <= 1 and an exactly periodic series gives 1 at its period.
// Lags whose overlap carries no energy report 0. Throws DataError for a
// constant series and ConfigError unless len > max_lag.
AutocorrCurve NormalizedAutocorr(std::span<const std::complex<double>> series,
                                 size_t max_lag);
AutocorrCurve NormalizedAutocorr(std::span<const double> series, size_t max_lag);

struct AverageAutocorr {
  AutocorrCurve curve;
  size_t trajectories = 0;  // contributing bin trajectories
  size_t skipped = 0;       // constant or too short
};

// Mean over every bin trajectory of every spectrogram. Summation is
// compensated and runs in corpus order, so the result does not depend on
// `jobs`. Throws DataError on an empty corpus or if every trajectory is
// skipped.
AverageAutocorr AverageAutocorrelation(const std::vector<ComplexSpectrogram>& corpus,
                                       size_t max_lag,
                                       AutocorrDomain domain = AutocorrDomain::kComplex,
                                       int jobs = 1);

// Mean of |r(tau)| over tau = from_lag .. max_lag.
double TailMass(const AutocorrCurve& curve, size_t from_lag);

// Columns: lag, value.
void WriteAutocorrCsv(const AutocorrCurve& curve, const std::filesystem::path& path);

// 10 log10 |X|^2 per frame and bin, floored at -200 dB.
FeatureMatrix SpectrogramDb(const ComplexSpectrogram& spec);

enum class ImageFormat { kCsv, kPgm };
ImageFormat ParseImageFormat(const std::string& name);

// CSV: one row per frame, values verbatim. PGM: binary P5 with frames along
// x and the highest column at the top, min-max scaled to 0..255; a constant
// matrix maps to 128.
void ExportMatrix(const FeatureMatrix& values, const std::filesystem::path& path,
                  ImageFormat format);

struct MsePair {
  std::string id;
  FeatureMatrix estimate;
  FeatureMatrix reference;
};

struct MseRow {
  std::string id;
  size_t frames = 0;
  double mse = 0.0;
};

struct MseReport {
  std::vector<MseRow> rows;
  double corpus_mean = 0.0;  // unweighted mean of the rows
};

// Throws DataError on a shape mismatch, naming the utterance.
MseReport MakeMseReport(const std::vector<MsePair>& pairs);
// Columns: utterance_id, n_frames, mse.
void WriteMseReportCsv(const MseReport& report, const std::filesystem::path& path);

}  // namespace ncderev

#endif  // NCDEREV_DIAGNOSTICS_H_
