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


#include "ncderev/diagnostics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "ncderev/error.h"
#include "ncderev/mlp.h"
#include "ncderev/parallel.h"

namespace ncderev {
namespace {

// Neumaier compensated accumulator.
class CompensatedSum {
 public:
  void Add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Returns false for a constant series.
bool TryAutocorr(std::span<const std::complex<double>> series, size_t max_lag,
                 std::vector<double>& out) {
  const size_t n = series.size();
  std::complex<double> mean{};
  for (const auto& v : series) mean += v;
  mean /= static_cast<double>(n);
  std::vector<std::complex<double>> s(n);
  std::vector<double> energy(n + 1, 0.0);  // prefix sums of |s|^2
  for (size_t i = 0; i < n; ++i) {
    s[i] = series[i] - mean;
    energy[i + 1] = energy[i] + std::norm(s[i]);
  }
  const double total = energy[n];
  double peak = 0.0;
  for (const auto& v : series) peak = std::max(peak, std::abs(v));
  if (!(total > 1e-24 * std::max(1.0, peak * peak) * static_cast<double>(n))) return false;
  out.assign(max_lag + 1, 0.0);
  for (size_t tau = 0; tau <= max_lag; ++tau) {
    const double head = energy[n - tau];
    const double tail = total - energy[tau];
    if (!(head > 0.0 && tail > 0.0)) continue;
    double acc = 0.0;
    for (size_t i = 0; i + tau < n; ++i) {
      acc += s[i].real() * s[i + tau].real() + s[i].imag() * s[i + tau].imag();
    }
    out[tau] = acc / std::sqrt(head * tail);
  }
  out[0] = 1.0;
  return true;
}

std::vector<std::complex<double>> ToComplex(std::span<const double> series) {
  return {series.begin(), series.end()};
}

}  // namespace

AutocorrDomain ParseAutocorrDomain(const std::string& name) {
  if (name == "complex") return AutocorrDomain::kComplex;
  if (name == "magnitude") return AutocorrDomain::kMagnitude;
  throw ConfigError("unknown autocorrelation domain: " + name);
}

AutocorrCurve NormalizedAutocorr(std::span<const std::complex<double>> series,
                                 size_t max_lag) {
  if (series.size() <= max_lag) {
    throw ConfigError("series length " + std::to_string(series.size()) +
                      " must exceed max_lag " + std::to_string(max_lag));
  }
  AutocorrCurve curve;
  if (!TryAutocorr(series, max_lag, curve.values)) {
    throw DataError("autocorrelation of a constant series");
  }
  return curve;
}

AutocorrCurve NormalizedAutocorr(std::span<const double> series, size_t max_lag) {
  const auto c = ToComplex(series);
  return NormalizedAutocorr(std::span<const std::complex<double>>(c), max_lag);
}

AverageAutocorr AverageAutocorrelation(const std::vector<ComplexSpectrogram>& corpus,
                                       size_t max_lag, AutocorrDomain domain, int jobs) {
  if (corpus.empty()) throw DataError("empty corpus");
  struct Partial {
    std::vector<std::vector<double>> curves;
    size_t skipped = 0;
  };
  std::vector<Partial> partials(corpus.size());
  ParallelFor(corpus.size(), jobs, [&](size_t u) {
    const ComplexSpectrogram& spec = corpus[u];
    Partial& part = partials[u];
    std::vector<double> curve;
    for (size_t k = 0; k < spec.bins(); ++k) {
      auto traj = spec.Trajectory(k);
      if (domain == AutocorrDomain::kMagnitude) {
        for (auto& v : traj) v = std::abs(v);
      }
      if (traj.size() <= max_lag || !TryAutocorr(traj, max_lag, curve)) {
        ++part.skipped;
        continue;
      }
      part.curves.push_back(curve);
    }
  });
  AverageAutocorr result;
  std::vector<CompensatedSum> sums(max_lag + 1);
  for (const Partial& part : partials) {
    result.skipped += part.skipped;
    for (const auto& curve : part.curves) {
      for (size_t tau = 0; tau <= max_lag; ++tau) sums[tau].Add(curve[tau]);
      ++result.trajectories;
    }
  }
  if (result.trajectories == 0) throw DataError("no usable bin trajectories in corpus");
  result.curve.values.resize(max_lag + 1);
  for (size_t tau = 0; tau <= max_lag; ++tau) {
    result.curve.values[tau] = sums[tau].value() / static_cast<double>(result.trajectories);
  }
  return result;
}

double TailMass(const AutocorrCurve& curve, size_t from_lag) {
  if (curve.values.empty() || from_lag > curve.max_lag()) {
    throw ConfigError("from_lag " + std::to_string(from_lag) + " beyond max_lag " +
                      std::to_string(curve.max_lag()));
  }
  double sum = 0.0;
  for (size_t tau = from_lag; tau <= curve.max_lag(); ++tau) sum += std::abs(curve.values[tau]);
  return sum / static_cast<double>(curve.max_lag() - from_lag + 1);
}

void WriteAutocorrCsv(const AutocorrCurve& curve, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << "lag,value\n";
  char buf[64];
  for (size_t tau = 0; tau < curve.values.size(); ++tau) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", tau, curve.values[tau]);
    out << buf;
  }
}

FeatureMatrix SpectrogramDb(const ComplexSpectrogram& spec) {
  FeatureMatrix out(static_cast<Eigen::Index>(spec.frames()),
                    static_cast<Eigen::Index>(spec.bins()));
  for (size_t n = 0; n < spec.frames(); ++n) {
    for (size_t k = 0; k < spec.bins(); ++k) {
      out(n, k) = 10.0 * std::log10(std::max(1e-20, std::norm(spec.at(n, k))));
    }
  }
  return out;
}

ImageFormat ParseImageFormat(const std::string& name) {
  if (name == "csv") return ImageFormat::kCsv;
  if (name == "pgm") return ImageFormat::kPgm;
  throw ConfigError("unknown export format: " + name);
}

void ExportMatrix(const FeatureMatrix& values, const std::filesystem::path& path,
                  ImageFormat format) {
  if (format == ImageFormat::kCsv) {
    WriteFeatureCsv(values, path);
    return;
  }
  if (values.size() == 0) throw DataError("cannot export an empty matrix");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  const double lo = values.minCoeff(), hi = values.maxCoeff();
  const Eigen::Index width = values.rows(), height = values.cols();
  out << "P5\n" << width << ' ' << height << "\n255\n";
  std::string row(static_cast<size_t>(width), '\0');
  for (Eigen::Index y = 0; y < height; ++y) {
    const Eigen::Index col = height - 1 - y;
    for (Eigen::Index x = 0; x < width; ++x) {
      int level = 128;
      if (hi > lo) {
        level = static_cast<int>(std::lround(255.0 * (values(x, col) - lo) / (hi - lo)));
      }
      row[static_cast<size_t>(x)] = static_cast<char>(static_cast<unsigned char>(level));
    }
    out.write(row.data(), width);
  }
  if (!out) throw DataError("write failed: " + path.string());
}

MseReport MakeMseReport(const std::vector<MsePair>& pairs) {
  MseReport report;
  double sum = 0.0;
  for (const MsePair& pair : pairs) {
    if (pair.estimate.rows() != pair.reference.rows() ||
        pair.estimate.cols() != pair.reference.cols()) {
      throw DataError("misaligned pair for utterance " + pair.id);
    }
    MseRow row{pair.id, static_cast<size_t>(pair.estimate.rows()),
               MseLoss(pair.estimate, pair.reference)};
    sum += row.mse;
    report.rows.push_back(std::move(row));
  }
  if (!report.rows.empty()) report.corpus_mean = sum / static_cast<double>(report.rows.size());
  return report;
}

void WriteMseReportCsv(const MseReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << "utterance_id,n_frames,mse\n";
  char buf[64];
  for (const MseRow& row : report.rows) {
    std::snprintf(buf, sizeof(buf), ",%zu,%.17g\n", row.frames, row.mse);
    out << row.id << buf;
  }
}

}  // namespace ncderev
