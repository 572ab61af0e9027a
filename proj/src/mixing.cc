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


#include "ncderev/mixing.h"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "ncderev/error.h"
#include "ncderev/parallel.h"

namespace ncderev {

std::string StreamName(MixStream stream) {
  switch (stream) {
    case MixStream::kReverb: return "reverb";
    case MixStream::kRefEnhanced: return "ref_enhanced";
    case MixStream::kDerevOfReverb: return "derev_of_reverb";
    case MixStream::kDerevOfRefEnhanced: return "derev_of_ref_enhanced";
  }
  return "reverb";
}

const std::optional<FeatureMatrix>& MixStreams::get(MixStream stream) const {
  switch (stream) {
    case MixStream::kReverb: return reverb;
    case MixStream::kRefEnhanced: return ref_enhanced;
    case MixStream::kDerevOfReverb: return derev_of_reverb;
    case MixStream::kDerevOfRefEnhanced: return derev_of_ref_enhanced;
  }
  return reverb;
}

void MixConfig::Validate() const {
  ConfigStreams(config_id);
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw ConfigError("lambda must lie in [0, 1], got " + std::to_string(lambda));
  }
}

std::pair<MixStream, MixStream> ConfigStreams(int config_id) {
  switch (config_id) {
    case 1: return {MixStream::kRefEnhanced, MixStream::kDerevOfReverb};
    case 2: return {MixStream::kRefEnhanced, MixStream::kDerevOfRefEnhanced};
    case 3: return {MixStream::kReverb, MixStream::kDerevOfRefEnhanced};
    case 4: return {MixStream::kReverb, MixStream::kDerevOfReverb};
  }
  throw ConfigError("mixing configuration must be 1-4, got " + std::to_string(config_id));
}

FeatureMatrix SemiEnhance(const MixConfig& config, const MixStreams& streams) {
  config.Validate();
  const auto [first_id, second_id] = ConfigStreams(config.config_id);
  const auto& first = streams.get(first_id);
  const auto& second = streams.get(second_id);
  if (!first) throw DataError("missing stream " + StreamName(first_id));
  if (!second) throw DataError("missing stream " + StreamName(second_id));
  if (first->rows() != second->rows() || first->cols() != second->cols()) {
    throw DataError("stream shapes differ: " + StreamName(first_id) + " vs " +
                    StreamName(second_id));
  }
  if (config.lambda == 0.0) return *first;
  if (config.lambda == 1.0) return *second;
  return (1.0 - config.lambda) * *first + config.lambda * *second;
}

std::vector<double> DefaultLambdaGrid() {
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(i / 20.0);
  return grid;
}

LambdaSweepResult LambdaSweep(int config_id, const std::vector<MixSubset>& subsets,
                              const std::vector<double>& grid, int jobs) {
  ConfigStreams(config_id);
  if (grid.empty()) throw ConfigError("empty lambda grid");
  for (double l : grid) {
    if (!(l >= 0.0 && l <= 1.0)) throw ConfigError("lambda grid value outside [0, 1]");
  }
  if (subsets.empty()) throw DataError("no subsets to sweep");
  for (const MixSubset& s : subsets) {
    if (s.utterances.empty()) throw DataError("empty subset " + s.name);
  }
  const size_t cells = subsets.size() * grid.size();
  std::vector<double> mse(cells);
  ParallelFor(cells, jobs, [&](size_t cell) {
    const MixSubset& subset = subsets[cell / grid.size()];
    const MixConfig config{config_id, grid[cell % grid.size()]};
    double sum = 0.0;
    double count = 0.0;
    for (const MixUtterance& u : subset.utterances) {
      const FeatureMatrix mixed = SemiEnhance(config, u.streams);
      if (mixed.rows() != u.clean.rows() || mixed.cols() != u.clean.cols()) {
        throw DataError("clean reference shape differs for utterance " + u.id);
      }
      sum += (mixed - u.clean).squaredNorm();
      count += static_cast<double>(mixed.size());
    }
    if (count == 0.0) throw DataError("subset " + subset.name + " has no frames");
    mse[cell] = sum / count;
  });

  LambdaSweepResult result;
  result.config_id = config_id;
  double lambda_sum = 0.0;
  for (size_t s = 0; s < subsets.size(); ++s) {
    LambdaOptimum best{subsets[s].name, grid[0], mse[s * grid.size()]};
    for (size_t g = 0; g < grid.size(); ++g) {
      const double m = mse[s * grid.size() + g];
      result.rows.push_back({subsets[s].name, config_id, grid[g], m});
      if (m < best.mse - 1e-12 * std::abs(best.mse)) best = {subsets[s].name, grid[g], m};
    }
    lambda_sum += best.lambda;
    result.optima.push_back(best);
  }
  result.average_lambda = lambda_sum / static_cast<double>(subsets.size());
  return result;
}

void WriteLambdaSweepCsv(const LambdaSweepResult& result, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << "subset,config,lambda,mse\n";
  char buf[96];
  for (const auto& row : result.rows) {
    std::snprintf(buf, sizeof(buf), ",%d,%.17g,%.17g\n", row.config_id, row.lambda, row.mse);
    out << row.subset << buf;
  }
}

void WriteLambdaSummaryCsv(const LambdaSweepResult& result,
                           const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << "subset,config,optimal_lambda,mse\n";
  char buf[96];
  for (const auto& o : result.optima) {
    std::snprintf(buf, sizeof(buf), ",%d,%.17g,%.17g\n", result.config_id, o.lambda, o.mse);
    out << o.subset << buf;
  }
  std::snprintf(buf, sizeof(buf), "average,%d,%.17g,\n", result.config_id,
                result.average_lambda);
  out << buf;
}

EnhancerKind ParseEnhancer(const std::string& name) {
  if (name == "identity") return EnhancerKind::kIdentity;
  if (name == "causal-fir") return EnhancerKind::kCausalFir;
  throw ConfigError("unknown enhancer: " + name);
}

std::string EnhancerName(EnhancerKind kind) {
  return kind == EnhancerKind::kIdentity ? "identity" : "causal-fir";
}

ReferenceEnhancer ReferenceEnhancer::Identity() { return {}; }

ReferenceEnhancer ReferenceEnhancer::FitCausalFir(
    const std::vector<SpectrogramPair>& adaptation, int p, Ridge ridge, int jobs) {
  if (adaptation.empty()) throw DataError("empty adaptation set");
  const size_t bins = adaptation[0].reverb.bins();
  for (const auto& pair : adaptation) {
    if (pair.reverb.bins() != bins || pair.clean.bins() != bins) {
      throw DataError("adaptation utterance " + pair.id + " has a different bin count");
    }
  }
  ReferenceEnhancer enhancer;
  enhancer.kind_ = EnhancerKind::kCausalFir;
  enhancer.filters_.resize(bins);
  ParallelFor(bins, jobs, [&](size_t k) {
    std::optional<NormalSystem> pooled;
    for (const auto& pair : adaptation) {
      const auto x = pair.reverb.Trajectory(k);
      const auto y = pair.clean.Trajectory(k);
      NormalSystem s = BuildNormalSystem(x, y, p, 0);
      if (pooled) {
        *pooled += s;
      } else {
        pooled = std::move(s);
      }
    }
    try {
      enhancer.filters_[k] = SolveNormalSystem(*pooled, ridge);
    } catch (const NumericalError& e) {
      throw NumericalError("bin " + std::to_string(k) + ": " + e.what());
    }
  });
  return enhancer;
}

ComplexSpectrogram ReferenceEnhancer::Apply(const ComplexSpectrogram& reverb) const {
  if (kind_ == EnhancerKind::kIdentity) return reverb;
  if (reverb.bins() != filters_.size()) {
    throw DataError("enhancer fitted for " + std::to_string(filters_.size()) +
                    " bins, input has " + std::to_string(reverb.bins()));
  }
  ComplexSpectrogram out = reverb;
  for (size_t k = 0; k < reverb.bins(); ++k) {
    const auto x = reverb.Trajectory(k);
    out.SetTrajectory(k, ApplyFilter(filters_[k], x, x.size()));
  }
  return out;
}

}  // namespace ncderev
