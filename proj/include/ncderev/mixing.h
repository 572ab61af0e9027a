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


#ifndef NCDEREV_MIXING_H_
#define NCDEREV_MIXING_H_

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ncderev/features.h"
#include "ncderev/ncfir.h"

namespace ncderev {

enum class MixStream { kReverb, kRefEnhanced, kDerevOfReverb, kDerevOfRefEnhanced };
std::string StreamName(MixStream stream);

// Feature streams of one utterance. Which ones are needed depends on the
// configuration.
struct MixStreams {
  std::optional<FeatureMatrix> reverb;
  std::optional<FeatureMatrix> ref_enhanced;
  std::optional<FeatureMatrix> derev_of_reverb;
  std::optional<FeatureMatrix> derev_of_ref_enhanced;

  const std::optional<FeatureMatrix>& get(MixStream stream) const;
};

// Configurations 1-4 combine (first, second) as
//   1: ref_enhanced, derev_of_reverb
//   2: ref_enhanced, derev_of_ref_enhanced
//   3: reverb,       derev_of_ref_enhanced
//   4: reverb,       derev_of_reverb
struct MixConfig {
  int config_id = 4;
  double lambda = 0.0;

  void Validate() const;
};

std::pair<MixStream, MixStream> ConfigStreams(int config_id);

// (1 - lambda) * first + lambda * second, elementwise. lambda = 0 and 1 return
// the respective stream unchanged. Throws ConfigError for a bad configuration
// and DataError for a missing stream or a shape mismatch.
FeatureMatrix SemiEnhance(const MixConfig& config, const MixStreams& streams);

struct MixUtterance {
  std::string id;
  MixStreams streams;
  FeatureMatrix clean;
};

struct MixSubset {
  std::string name;
  std::vector<MixUtterance> utterances;
};

// 0, 0.05, ..., 1.
std::vector<double> DefaultLambdaGrid();

struct LambdaSweepRow {
  std::string subset;
  int config_id = 0;
  double lambda = 0.0;
  double mse = 0.0;
};

struct LambdaOptimum {
  std::string subset;
  double lambda = 0.0;
  double mse = 0.0;
};

struct LambdaSweepResult {
  int config_id = 0;
  std::vector<LambdaSweepRow> rows;  // subset-major, grid order
  std::vector<LambdaOptimum> optima;
  double average_lambda = 0.0;
};

// For every subset and grid value, the MSE to clean pooled over all cells of
// the subset. The optimum is the first grid value whose MSE is not beaten by
// more than 1e-12 relative by a later one, so ties go to the smaller lambda
// when the grid is ascending. Throws ConfigError for an empty grid or values
// outside [0, 1] and DataError for an empty subset.
LambdaSweepResult LambdaSweep(int config_id, const std::vector<MixSubset>& subsets,
                              const std::vector<double>& grid, int jobs = 1);

// Columns: subset, config, lambda, mse.
void WriteLambdaSweepCsv(const LambdaSweepResult& result,
                         const std::filesystem::path& path);
// Columns: subset, config, optimal_lambda, mse; a final "average" row.
void WriteLambdaSummaryCsv(const LambdaSweepResult& result,
                           const std::filesystem::path& path);

enum class EnhancerKind { kIdentity, kCausalFir };
EnhancerKind ParseEnhancer(const std::string& name);
std::string EnhancerName(EnhancerKind kind);

// Stand-in for an external reference enhancer, applied to the STFT before
// featurization. The causal FIR variant uses one causal filter per bin (q = 0)
// fitted once on an adaptation set, with the normal equations pooled over all
// its utterances.
class ReferenceEnhancer {
 public:
  static ReferenceEnhancer Identity();
  static ReferenceEnhancer FitCausalFir(const std::vector<SpectrogramPair>& adaptation,
                                        int p, Ridge ridge = Ridge::Auto(), int jobs = 1);

  EnhancerKind kind() const { return kind_; }
  const std::vector<NcFirFilter>& filters() const { return filters_; }

  // Same frame count as the input. Throws DataError on a bin count mismatch.
  ComplexSpectrogram Apply(const ComplexSpectrogram& reverb) const;

 private:
  EnhancerKind kind_ = EnhancerKind::kIdentity;
  std::vector<NcFirFilter> filters_;
};

}  // namespace ncderev

#endif  // NCDEREV_MIXING_H_
