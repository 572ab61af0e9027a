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


#ifndef NCDEREV_NCFIR_H_
#define NCDEREV_NCFIR_H_

#include <Eigen/Dense>

#include <complex>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ncderev/stft.h"

// Per-bin non-causal MSE-optimal complex FIR filtering of STFT trajectories.
//
// For a reverberant bin trajectory X and clean trajectory Y the estimate is
//
//   Yhat(n) = sum_{l=0}^{p+q} g(l) X(n + q - l),   n = 0 .. N_c - 1,
//
// so tap l = 0 looks q frames ahead and tap l = p+q looks p frames back. X is
// taken as zero outside [0, len(X)). The taps minimize
// E = sum_n |Yhat(n) - Y(n)|^2 over the clean length N_c <= len(X).

namespace ncderev {

using ComplexSeq = std::vector<std::complex<double>>;

struct BinTrajectory {
  ComplexSeq values;
  size_t bin_index = 0;
};

struct NcFirFilter {
  int p = 0;  // causal (past) context in frames
  int q = 0;  // non-causal (future) context in frames
  std::vector<double> g_real;
  std::vector<double> g_imag;

  NcFirFilter() = default;
  NcFirFilter(int p, int q);

  size_t num_taps() const { return g_real.size(); }
  std::complex<double> tap(size_t l) const { return {g_real[l], g_imag[l]}; }
  void set_tap(size_t l, std::complex<double> v) {
    g_real[l] = v.real();
    g_imag[l] = v.imag();
  }
  // Frame offset of tap l relative to the current frame: l - q, so the range
  // is -q (future) .. p (past).
  int tap_offset(size_t l) const { return static_cast<int>(l) - q; }

  // Unit tap on the current frame.
  static NcFirFilter Identity(int p, int q);
};

// Real and imaginary correlation blocks of the normal equations. With
// regressors x_l(n) = X(n + q - l) = x_r + j x_j,
//   m_rr(i, l) = sum_n x_r,i(n) x_r,l(n)    r_xr_yr(i) = sum_n x_r,i(n) Y_r(n)
//   m_jj(i, l) = sum_n x_j,i(n) x_j,l(n)    r_xj_yj(i) = sum_n x_j,i(n) Y_j(n)
//   m_rj(i, l) = sum_n x_r,i(n) x_j,l(n)    r_xr_yj(i) = sum_n x_r,i(n) Y_j(n)
//   m_jr(i, l) = sum_n x_j,i(n) x_r,l(n)    r_xj_yr(i) = sum_n x_j,i(n) Y_r(n)
// with n over the clean range. Systems of equal (p, q) may be summed to pool
// several utterances into one fit.
struct NormalSystem {
  int p = 0;
  int q = 0;
  Eigen::MatrixXd m_rr, m_jj, m_rj, m_jr;
  Eigen::VectorXd r_xr_yr, r_xj_yj, r_xr_yj, r_xj_yr;

  size_t num_taps() const { return static_cast<size_t>(p + q + 1); }
  NormalSystem& operator+=(const NormalSystem& other);
};

// Diagonal loading added to the stacked system. Auto resolves to
// 1e-8 * trace(m_rr + m_jj) / (p + q + 1).
struct Ridge {
  bool automatic = false;
  double value = 0.0;

  static Ridge None() { return {}; }
  static Ridge Fixed(double v) { return {false, v}; }
  static Ridge Auto() { return {true, 0.0}; }
  double Resolve(const NormalSystem& system) const;
};

// Throws DataError on empty input or len(Y) > len(X), ConfigError on negative
// context, and NumericalError if p + q + 1 > len(Y).
NormalSystem BuildNormalSystem(std::span<const std::complex<double>> x,
                               std::span<const std::complex<double>> y, int p,
                               int q);

// Solves the stacked real system
//   [ P  -Q ] [g_r]   [ r_xr_yr + r_xj_yj ]
//   [ Q   P ] [g_j] = [ r_xr_yj - r_xj_yr ],   P = m_rr + m_jj, Q = m_rj - m_jr
// with ridge * I added. A resolved ridge of 0 on an all-zero system returns
// the zero filter when automatic; otherwise a singular system throws
// NumericalError("singular normal equations; supply ridge").
NcFirFilter SolveNormalSystem(const NormalSystem& system,
                              Ridge ridge = Ridge::None());

NcFirFilter FitFilter(std::span<const std::complex<double>> x,
                      std::span<const std::complex<double>> y, int p, int q,
                      Ridge ridge = Ridge::None());

// Block-elimination closed form of the same system:
//   B   = P^-1 (M_jr - M_rj) - (M_rj - M_jr)^-1 P
//   g_r = B^-1 (P^-1 (r_xj_yr - r_xr_yj) - (M_rj - M_jr)^-1 (r_xr_yr + r_xj_yj))
//   C   = P^-1 (M_rj - M_jr) - (M_jr - M_rj)^-1 P
//   g_j = C^-1 ((M_jr - M_rj)^-1 (r_xj_yr - r_xr_yj) - P^-1 (r_xr_yr + r_xj_yj))
// Verification path only: M_rj - M_jr is antisymmetric, so it is singular for
// odd tap counts and for real-valued trajectories. Throws NumericalError when
// any intermediate matrix is not invertible.
NcFirFilter ClosedFormFilter(const NormalSystem& system);

// Yhat(n) for n in [0, out_len).
ComplexSeq ApplyFilter(const NcFirFilter& filter,
                       std::span<const std::complex<double>> x, size_t out_len);

// Sum of squared moduli of the differences. Throws DataError on length
// mismatch.
double PredictionError(std::span<const std::complex<double>> estimate,
                       std::span<const std::complex<double>> target);

struct LsOracleResult {
  NcFirFilter filter;
  Eigen::Index rank = 0;
  bool rank_deficient = false;
};

// Reference solution: the explicit N_c x (p+q+1) complex design matrix solved
// by complete orthogonal decomposition. Rank-deficient problems get the
// minimum-norm solution and are flagged.
LsOracleResult LsOracle(std::span<const std::complex<double>> x,
                        std::span<const std::complex<double>> y, int p, int q);

struct SpectrogramFit {
  ComplexSpectrogram estimate;  // N_c x K
  std::vector<NcFirFilter> filters;
  std::vector<double> errors;    // per-bin E
  std::vector<double> baseline;  // per-bin sum |X - Y|^2 over the clean range

  double total_error() const;
};

// Fits and applies one filter per bin. `reverb` may be longer than `clean`;
// only the first clean.frames() frames are regressed. Per-bin failures are
// rethrown as NumericalError prefixed with the bin index.
SpectrogramFit DereverberateSpectrogram(const ComplexSpectrogram& reverb,
                                        const ComplexSpectrogram& clean, int p,
                                        int q, Ridge ridge = Ridge::Auto(),
                                        int jobs = 1);

// sum_k E_k / sum_{n,k} |Y(n,k)|^2 over the clean range.
double NormalizedFitError(const ComplexSpectrogram& reverb,
                          const ComplexSpectrogram& clean, int p, int q,
                          Ridge ridge = Ridge::Auto(), int jobs = 1);

struct SpectrogramPair {
  std::string id;
  ComplexSpectrogram reverb;
  ComplexSpectrogram clean;
};

struct SweepRow {
  int p = 0;
  int q = 0;
  int taps = 1;
  double ratio_percent = 0.0;  // 100 p / (p + q); 0 when p + q == 0
  double mean_err = 0.0;
  size_t utterance_count = 0;
  std::vector<double> per_utterance;
};

std::vector<SweepRow> ContextSweep(const std::vector<SpectrogramPair>& corpus,
                                   const std::vector<std::pair<int, int>>& grid,
                                   Ridge ridge = Ridge::Auto(), int jobs = 1);

// Columns: bin, tap_index (-q..p), g_real, g_imag.
void WriteFilterCsv(const std::vector<NcFirFilter>& filters,
                    const std::filesystem::path& path);
// Columns: p, q, taps, ratio_percent, mean_err, utterance_count.
void WriteSweepCsv(const std::vector<SweepRow>& rows,
                   const std::filesystem::path& path);

}  // namespace ncderev

#endif  // NCDEREV_NCFIR_H_
