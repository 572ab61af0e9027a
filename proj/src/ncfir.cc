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


#include "ncderev/ncfir.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "ncderev/error.h"
#include "ncderev/parallel.h"

namespace ncderev {

namespace {

void CheckContext(int p, int q) {
  if (p < 0 || q < 0) {
    throw ConfigError("context lengths must be non-negative (p=" +
                      std::to_string(p) + ", q=" + std::to_string(q) + ")");
  }
}

// Regressor matrix of shifted X values: row n, column l holds X(n + q - l).
Eigen::MatrixXcd DesignMatrix(std::span<const std::complex<double>> x,
                              size_t rows, int p, int q) {
  const auto taps = static_cast<Eigen::Index>(p + q + 1);
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(rows), taps);
  const auto len = static_cast<long>(x.size());
  for (Eigen::Index l = 0; l < taps; ++l) {
    for (size_t n = 0; n < rows; ++n) {
      const long idx = static_cast<long>(n) + q - static_cast<long>(l);
      if (idx >= 0 && idx < len) a(static_cast<Eigen::Index>(n), l) = x[static_cast<size_t>(idx)];
    }
  }
  return a;
}

bool IsInvertible(const Eigen::MatrixXd& m) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  lu.setThreshold(1e-13);
  return lu.isInvertible();
}

}  // namespace

NcFirFilter::NcFirFilter(int p, int q)
    : p(p), q(q), g_real(static_cast<size_t>(p + q + 1), 0.0),
      g_imag(static_cast<size_t>(p + q + 1), 0.0) {
  CheckContext(p, q);
}

NcFirFilter NcFirFilter::Identity(int p, int q) {
  NcFirFilter f(p, q);
  f.g_real[static_cast<size_t>(q)] = 1.0;
  return f;
}

NormalSystem& NormalSystem::operator+=(const NormalSystem& other) {
  if (other.p != p || other.q != q) {
    throw ConfigError("cannot pool normal systems of different context");
  }
  m_rr += other.m_rr;
  m_jj += other.m_jj;
  m_rj += other.m_rj;
  m_jr += other.m_jr;
  r_xr_yr += other.r_xr_yr;
  r_xj_yj += other.r_xj_yj;
  r_xr_yj += other.r_xr_yj;
  r_xj_yr += other.r_xj_yr;
  return *this;
}

double Ridge::Resolve(const NormalSystem& system) const {
  if (!automatic) return value;
  return 1e-8 * (system.m_rr.trace() + system.m_jj.trace()) /
         static_cast<double>(system.num_taps());
}

NormalSystem BuildNormalSystem(std::span<const std::complex<double>> x,
                               std::span<const std::complex<double>> y, int p,
                               int q) {
  CheckContext(p, q);
  if (x.empty() || y.empty()) throw DataError("empty trajectory");
  if (y.size() > x.size()) {
    throw DataError("clean trajectory (" + std::to_string(y.size()) +
                    " frames) longer than reverberant (" +
                    std::to_string(x.size()) + ")");
  }
  const size_t taps = static_cast<size_t>(p + q + 1);
  if (taps > y.size()) {
    throw NumericalError("underdetermined fit: " + std::to_string(taps) +
                         " taps for " + std::to_string(y.size()) + " frames");
  }
  const Eigen::MatrixXcd a = DesignMatrix(x, y.size(), p, q);
  const Eigen::MatrixXd ar = a.real();
  const Eigen::MatrixXd aj = a.imag();
  Eigen::VectorXd yr(static_cast<Eigen::Index>(y.size()));
  Eigen::VectorXd yj(static_cast<Eigen::Index>(y.size()));
  for (size_t n = 0; n < y.size(); ++n) {
    yr(static_cast<Eigen::Index>(n)) = y[n].real();
    yj(static_cast<Eigen::Index>(n)) = y[n].imag();
  }
  NormalSystem s;
  s.p = p;
  s.q = q;
  s.m_rr = ar.transpose() * ar;
  s.m_jj = aj.transpose() * aj;
  s.m_rj = ar.transpose() * aj;
  s.m_jr = s.m_rj.transpose();
  s.r_xr_yr = ar.transpose() * yr;
  s.r_xj_yj = aj.transpose() * yj;
  s.r_xr_yj = ar.transpose() * yj;
  s.r_xj_yr = aj.transpose() * yr;
  return s;
}

NcFirFilter SolveNormalSystem(const NormalSystem& s, Ridge ridge) {
  const auto t = static_cast<Eigen::Index>(s.num_taps());
  const Eigen::MatrixXd pm = s.m_rr + s.m_jj;
  const Eigen::MatrixXd qm = s.m_rj - s.m_jr;
  const double trace = pm.trace();
  if (ridge.automatic && trace == 0.0) return NcFirFilter(s.p, s.q);

  Eigen::MatrixXd stacked(2 * t, 2 * t);
  stacked.topLeftCorner(t, t) = pm;
  stacked.topRightCorner(t, t) = -qm;
  stacked.bottomLeftCorner(t, t) = qm;
  stacked.bottomRightCorner(t, t) = pm;
  const double lambda = ridge.Resolve(s);
  if (lambda < 0.0) throw ConfigError("ridge must be non-negative");
  stacked.diagonal().array() += lambda;

  Eigen::VectorXd rhs(2 * t);
  rhs.head(t) = s.r_xr_yr + s.r_xj_yj;
  rhs.tail(t) = s.r_xr_yj - s.r_xj_yr;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(stacked);
  qr.setThreshold(1e-13);
  if (!qr.isInvertible()) {
    throw NumericalError("singular normal equations; supply ridge");
  }
  const Eigen::VectorXd g = qr.solve(rhs);
  NcFirFilter f(s.p, s.q);
  for (Eigen::Index l = 0; l < t; ++l) {
    f.g_real[static_cast<size_t>(l)] = g(l);
    f.g_imag[static_cast<size_t>(l)] = g(t + l);
  }
  for (size_t l = 0; l < f.num_taps(); ++l) {
    if (!std::isfinite(f.g_real[l]) || !std::isfinite(f.g_imag[l])) {
      throw NumericalError("non-finite filter taps");
    }
  }
  return f;
}

NcFirFilter FitFilter(std::span<const std::complex<double>> x,
                      std::span<const std::complex<double>> y, int p, int q,
                      Ridge ridge) {
  return SolveNormalSystem(BuildNormalSystem(x, y, p, q), ridge);
}

NcFirFilter ClosedFormFilter(const NormalSystem& s) {
  const Eigen::MatrixXd pm = s.m_rr + s.m_jj;
  const Eigen::MatrixXd rj_minus_jr = s.m_rj - s.m_jr;
  const Eigen::MatrixXd jr_minus_rj = s.m_jr - s.m_rj;
  if (!IsInvertible(pm) || !IsInvertible(rj_minus_jr)) {
    throw NumericalError("closed form undefined: M_rr + M_jj or M_rj - M_jr "
                         "is singular");
  }
  const Eigen::MatrixXd p_inv = pm.inverse();
  const Eigen::MatrixXd rj_inv = rj_minus_jr.inverse();
  const Eigen::MatrixXd jr_inv = jr_minus_rj.inverse();
  const Eigen::VectorXd sum_rhs = s.r_xr_yr + s.r_xj_yj;
  const Eigen::VectorXd cross_rhs = s.r_xj_yr - s.r_xr_yj;

  const Eigen::MatrixXd b = p_inv * jr_minus_rj - rj_inv * pm;
  const Eigen::MatrixXd c = p_inv * rj_minus_jr - jr_inv * pm;
  if (!IsInvertible(b) || !IsInvertible(c)) {
    throw NumericalError("closed form undefined: reduced matrix is singular");
  }
  const Eigen::VectorXd g_r =
      b.partialPivLu().solve(p_inv * cross_rhs - rj_inv * sum_rhs);
  const Eigen::VectorXd g_j =
      c.partialPivLu().solve(jr_inv * cross_rhs - p_inv * sum_rhs);

  NcFirFilter f(s.p, s.q);
  for (size_t l = 0; l < f.num_taps(); ++l) {
    f.g_real[l] = g_r(static_cast<Eigen::Index>(l));
    f.g_imag[l] = g_j(static_cast<Eigen::Index>(l));
  }
  return f;
}

ComplexSeq ApplyFilter(const NcFirFilter& filter,
                       std::span<const std::complex<double>> x, size_t out_len) {
  ComplexSeq out(out_len);
  const auto len = static_cast<long>(x.size());
  for (size_t n = 0; n < out_len; ++n) {
    std::complex<double> acc = 0.0;
    for (size_t l = 0; l < filter.num_taps(); ++l) {
      const long idx = static_cast<long>(n) + filter.q - static_cast<long>(l);
      if (idx >= 0 && idx < len) acc += filter.tap(l) * x[static_cast<size_t>(idx)];
    }
    out[n] = acc;
  }
  return out;
}

double PredictionError(std::span<const std::complex<double>> estimate,
                       std::span<const std::complex<double>> target) {
  if (estimate.size() != target.size()) {
    throw DataError("prediction error: length mismatch (" +
                    std::to_string(estimate.size()) + " vs " +
                    std::to_string(target.size()) + ")");
  }
  double e = 0.0;
  for (size_t n = 0; n < target.size(); ++n) e += std::norm(estimate[n] - target[n]);
  return e;
}

LsOracleResult LsOracle(std::span<const std::complex<double>> x,
                        std::span<const std::complex<double>> y, int p, int q) {
  CheckContext(p, q);
  if (x.empty() || y.empty()) throw DataError("empty trajectory");
  if (y.size() > x.size()) throw DataError("clean trajectory longer than reverberant");
  const Eigen::MatrixXcd a = DesignMatrix(x, y.size(), p, q);
  Eigen::VectorXcd target(static_cast<Eigen::Index>(y.size()));
  for (size_t n = 0; n < y.size(); ++n) target(static_cast<Eigen::Index>(n)) = y[n];

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXcd> cod(a);
  LsOracleResult result;
  result.rank = cod.rank();
  result.rank_deficient = result.rank < a.cols();
  const Eigen::VectorXcd g = result.rank == 0
                                 ? Eigen::VectorXcd::Zero(a.cols()).eval()
                                 : cod.solve(target).eval();
  result.filter = NcFirFilter(p, q);
  for (Eigen::Index l = 0; l < a.cols(); ++l) {
    result.filter.set_tap(static_cast<size_t>(l), g(l));
  }
  return result;
}

double SpectrogramFit::total_error() const {
  double total = 0.0;
  for (double e : errors) total += e;
  return total;
}

SpectrogramFit DereverberateSpectrogram(const ComplexSpectrogram& reverb,
                                        const ComplexSpectrogram& clean, int p,
                                        int q, Ridge ridge, int jobs) {
  if (reverb.bins() != clean.bins()) {
    throw DataError("bin count mismatch: " + std::to_string(reverb.bins()) +
                    " vs " + std::to_string(clean.bins()));
  }
  if (clean.frames() > reverb.frames()) {
    throw DataError("clean spectrogram longer than reverberant");
  }
  const size_t bins = clean.bins();
  const size_t frames = clean.frames();
  SpectrogramFit fit;
  fit.estimate = ComplexSpectrogram(frames, bins, clean.config(), clean.sample_rate());
  fit.filters.resize(bins);
  fit.errors.resize(bins);
  fit.baseline.resize(bins);
  std::vector<ComplexSeq> estimates(bins);
  ParallelFor(bins, jobs, [&](size_t k) {
    const ComplexSeq x = reverb.Trajectory(k);
    const ComplexSeq y = clean.Trajectory(k);
    try {
      fit.filters[k] = FitFilter(x, y, p, q, ridge);
    } catch (const NumericalError& e) {
      throw NumericalError("bin " + std::to_string(k) + ": " + e.what());
    }
    estimates[k] = ApplyFilter(fit.filters[k], x, frames);
    fit.errors[k] = PredictionError(estimates[k], y);
    fit.baseline[k] = PredictionError(std::span(x).first(frames), y);
  });
  for (size_t k = 0; k < bins; ++k) fit.estimate.SetTrajectory(k, estimates[k]);
  return fit;
}

double NormalizedFitError(const ComplexSpectrogram& reverb,
                          const ComplexSpectrogram& clean, int p, int q,
                          Ridge ridge, int jobs) {
  const SpectrogramFit fit = DereverberateSpectrogram(reverb, clean, p, q, ridge, jobs);
  double energy = 0.0;
  for (const auto& v : clean.values()) energy += std::norm(v);
  if (!(energy > 0.0)) throw DataError("clean spectrogram has zero energy");
  return fit.total_error() / energy;
}

std::vector<SweepRow> ContextSweep(const std::vector<SpectrogramPair>& corpus,
                                   const std::vector<std::pair<int, int>>& grid,
                                   Ridge ridge, int jobs) {
  if (corpus.empty()) throw ConfigError("context sweep needs a non-empty corpus");
  if (grid.empty()) throw ConfigError("context sweep needs a non-empty grid");
  std::vector<SweepRow> rows;
  rows.reserve(grid.size());
  for (const auto& [p, q] : grid) {
    CheckContext(p, q);
    SweepRow row;
    row.p = p;
    row.q = q;
    row.taps = p + q + 1;
    row.ratio_percent = p + q == 0 ? 0.0 : 100.0 * p / (p + q);
    row.per_utterance.resize(corpus.size());
    ParallelFor(corpus.size(), jobs, [&](size_t u) {
      row.per_utterance[u] =
          NormalizedFitError(corpus[u].reverb, corpus[u].clean, p, q, ridge);
    });
    double sum = 0.0;
    for (double e : row.per_utterance) sum += e;
    row.utterance_count = corpus.size();
    row.mean_err = sum / static_cast<double>(corpus.size());
    rows.push_back(std::move(row));
  }
  return rows;
}

void WriteFilterCsv(const std::vector<NcFirFilter>& filters,
                    const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << "bin,tap_index,g_real,g_imag\n";
  char buf[128];
  for (size_t k = 0; k < filters.size(); ++k) {
    const NcFirFilter& f = filters[k];
    for (size_t l = 0; l < f.num_taps(); ++l) {
      std::snprintf(buf, sizeof(buf), "%zu,%d,%.17g,%.17g\n", k, f.tap_offset(l),
                    f.g_real[l], f.g_imag[l]);
      out << buf;
    }
  }
}

void WriteSweepCsv(const std::vector<SweepRow>& rows,
                   const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << "p,q,taps,ratio_percent,mean_err,utterance_count\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%d,%.6g,%.17g,%zu\n", r.p, r.q, r.taps,
                  r.ratio_percent, r.mean_err, r.utterance_count);
    out << buf;
  }
}

}  // namespace ncderev
