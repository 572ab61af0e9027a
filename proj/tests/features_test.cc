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

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "ncderev/error.h"
#include "test_util.h"

namespace ncderev {
namespace {

ComplexSpectrogram RandomSpectrogram(Rng& rng, size_t frames) {
  const StftConfig config;
  ComplexSpectrogram spec(frames, config.num_bins(), config, 16000);
  for (size_t n = 0; n < frames; ++n) {
    for (size_t k = 0; k < spec.bins(); ++k) spec.at(n, k) = {rng.Normal(), rng.Normal()};
  }
  return spec;
}

FeatureMatrix RandomFeatures(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  FeatureMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = 3.0 * rng.Normal() + c;
  }
  return m;
}

TEST(MelBankTest, StandardShape) {
  const MelFilterBank bank = MakeMelBank(512, 16000, 40);
  EXPECT_EQ(bank.weights.rows(), 40);
  EXPECT_EQ(bank.weights.cols(), 257);
  EXPECT_GE(bank.weights.minCoeff(), 0.0);
}

TEST(MelBankTest, MelScaleRoundTrip) {
  EXPECT_NEAR(HzToMel(1000.0), 2595.0 * std::log10(1.0 + 1000.0 / 700.0), 1e-12);
  for (double hz : {0.0, 100.0, 3000.0, 8000.0}) EXPECT_NEAR(MelToHz(HzToMel(hz)), hz, 1e-9);
}

TEST(MelBankTest, PeaksStrictlyIncreasing) {
  const MelFilterBank bank = MakeMelBank(512, 16000, 40);
  Eigen::Index prev = -1;
  for (int m = 0; m < 40; ++m) {
    Eigen::Index peak;
    bank.weights.row(m).maxCoeff(&peak);
    EXPECT_GT(peak, prev);
    prev = peak;
    if (m > 0) EXPECT_GT(HzToMel(bank.center_hz[m]), HzToMel(bank.center_hz[m - 1]));
  }
}

TEST(MelBankTest, ContiguousSupportAndCoverage) {
  const MelFilterBank bank = MakeMelBank(512, 16000, 40);
  for (int m = 0; m < 40; ++m) {
    int runs = 0;
    bool inside = false;
    for (Eigen::Index b = 0; b < bank.weights.cols(); ++b) {
      const bool nz = bank.weights(m, b) > 0.0;
      if (nz && !inside) ++runs;
      inside = nz;
    }
    EXPECT_EQ(runs, 1) << "filter " << m;
  }
  const double bin_hz = 16000.0 / 512;
  for (Eigen::Index b = 0; b < 257; ++b) {
    const double f = b * bin_hz;
    if (f < bank.center_hz.front() || f > bank.center_hz.back()) continue;
    EXPECT_GT(bank.weights.col(b).sum(), 0.0) << "bin " << b;
  }
}

TEST(MelBankTest, InfeasibleSizes) {
  EXPECT_THROW(MakeMelBank(64, 16000, 40), ConfigError);
  EXPECT_THROW(MakeMelBank(512, 16000, 0), ConfigError);
}

TEST(LogMelTest, ZeroSpectrogramGivesFloor) {
  const StftConfig config;
  const ComplexSpectrogram spec(5, config.num_bins(), config, 16000);
  const MelFilterBank bank = MakeMelBank(512, 16000);
  const FeatureMatrix f = LogMel(spec, bank, EnergyFloor::Absolute(1e-6));
  ASSERT_EQ(f.rows(), 5);
  ASSERT_EQ(f.cols(), 40);
  for (Eigen::Index i = 0; i < f.size(); ++i) EXPECT_DOUBLE_EQ(f.data()[i], std::log(1e-6));
  const FeatureMatrix g = LogMel(spec, bank);
  EXPECT_TRUE(g.allFinite());
}

TEST(LogMelTest, ScalingShiftsByTwoLogC) {
  Rng rng(1);
  const auto spec = RandomSpectrogram(rng, 8);
  ComplexSpectrogram scaled = spec;
  const double c = 3.5;
  for (size_t n = 0; n < spec.frames(); ++n) {
    for (size_t k = 0; k < spec.bins(); ++k) scaled.at(n, k) *= c;
  }
  const MelFilterBank bank = MakeMelBank(512, 16000);
  const FeatureMatrix a = LogMel(spec, bank, EnergyFloor::Absolute(1e-12));
  const FeatureMatrix b = LogMel(scaled, bank, EnergyFloor::Absolute(1e-12));
  EXPECT_LE(((b - a).array() - 2.0 * std::log(c)).abs().maxCoeff(), 1e-10);
}

TEST(LogMelTest, ToneLandsInNearestFilter) {
  const StftConfig config;
  const MelFilterBank bank = MakeMelBank(512, 16000);
  const double bin_hz = 16000.0 / 512;
  for (int m = 5; m < 40; m += 3) {
    const long bin = std::lround(bank.center_hz[m] / bin_hz);
    const double freq = bin * bin_hz;
    Waveform wave;
    wave.samples.resize(4000);
    for (size_t i = 0; i < wave.samples.size(); ++i) {
      wave.samples[i] = std::cos(2.0 * std::numbers::pi * freq * i / 16000.0);
    }
    const FeatureMatrix f = LogMel(Stft(wave, config), bank);
    Eigen::Index best;
    f.row(3).maxCoeff(&best);
    int nearest = 0;
    for (int j = 1; j < 40; ++j) {
      if (std::abs(bank.center_hz[j] - freq) < std::abs(bank.center_hz[nearest] - freq)) nearest = j;
    }
    EXPECT_EQ(best, nearest) << "tone at " << freq << " Hz";
  }
}

TEST(LogMelTest, MonotoneInBinPower) {
  Rng rng(2);
  const auto spec = RandomSpectrogram(rng, 4);
  const MelFilterBank bank = MakeMelBank(512, 16000);
  const FeatureMatrix base = LogMel(spec, bank);
  for (size_t b : {3u, 60u, 200u}) {
    ComplexSpectrogram louder = spec;
    louder.at(2, b) *= 4.0;
    const FeatureMatrix up = LogMel(louder, bank);
    for (int k = 0; k < 40; ++k) {
      if (bank.weights(k, static_cast<Eigen::Index>(b)) > 0.0) {
        EXPECT_GE(up(2, k), base(2, k));
      }
    }
  }
}

TEST(LogMelTest, BinMismatchIsError) {
  Rng rng(3);
  const auto spec = RandomSpectrogram(rng, 3);
  EXPECT_THROW(LogMel(spec, MakeMelBank(1024, 16000)), DataError);
}

TEST(MvnTest, ZeroMeanUnitVariance) {
  Rng rng(4);
  const FeatureMatrix m = Mvn(RandomFeatures(rng, 120, 40));
  for (Eigen::Index c = 0; c < 40; ++c) {
    EXPECT_LE(std::abs(m.col(c).mean()), 1e-9);
    EXPECT_LE(std::abs(m.col(c).squaredNorm() / 120.0 - 1.0), 1e-6);
  }
}

TEST(MvnTest, ConstantColumnIsCenteredOnly) {
  FeatureMatrix m = FeatureMatrix::Constant(10, 3, 7.0);
  m.col(1).setLinSpaced(10, 0.0, 1.0);
  const FeatureMatrix out = Mvn(m);
  EXPECT_EQ(out.col(0).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(out.col(2).cwiseAbs().maxCoeff(), 0.0);
}

TEST(MvnTest, Idempotent) {
  Rng rng(5);
  const FeatureMatrix once = Mvn(RandomFeatures(rng, 50, 40));
  EXPECT_LE((Mvn(once) - once).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(MvnTest, SingleFrameIsError) {
  EXPECT_THROW(Mvn(FeatureMatrix::Zero(1, 40)), DataError);
}

TEST(StackContextTest, NoContextIsIdentity) {
  Rng rng(6);
  const FeatureMatrix m = RandomFeatures(rng, 7, 40);
  EXPECT_EQ(StackContext(m, 0, 0), m);
}

TEST(StackContextTest, ZeroPaddedEdges) {
  FeatureMatrix m(3, 2);
  m << 1, 2, 3, 4, 5, 6;
  const FeatureMatrix s = StackContext(m, 1, 1);
  ASSERT_EQ(s.cols(), 6);
  Eigen::RowVectorXd first(6), last(6);
  first << 0, 0, 1, 2, 3, 4;
  last << 3, 4, 5, 6, 0, 0;
  EXPECT_EQ(Eigen::RowVectorXd(s.row(0)), first);
  EXPECT_EQ(Eigen::RowVectorXd(s.row(2)), last);
}

TEST(StackContextTest, TwentyOneFrameDimensionAndCenterBlock) {
  Rng rng(7);
  const FeatureMatrix m = RandomFeatures(rng, 30, 40);
  const FeatureMatrix s = StackContext(m, 10, 10);
  EXPECT_EQ(s.cols(), 840);
  EXPECT_EQ(FeatureMatrix(s.middleCols(400, 40)), m);
  const FeatureMatrix t = StackContext(m, 3, 1);
  EXPECT_EQ(FeatureMatrix(t.middleCols(120, 40)), m);
}

TEST(AlignPairsTest, Truncation) {
  Rng rng(8);
  const FeatureMatrix r = RandomFeatures(rng, 105, 40);
  const FeatureMatrix c = RandomFeatures(rng, 98, 40);
  const auto [a, b] = AlignPairs(r, c);
  EXPECT_EQ(a.rows(), 98);
  EXPECT_EQ(b.rows(), 98);
  EXPECT_EQ(a, FeatureMatrix(r.topRows(98)));
  const auto [e, f] = AlignPairs(c, c);
  EXPECT_EQ(e, c);
  EXPECT_THROW(AlignPairs(RandomFeatures(rng, 98, 40), RandomFeatures(rng, 99, 40)), DataError);
}

TEST(PipelineTest, Deterministic) {
  Rng rng(9);
  Waveform wave;
  wave.samples = testing::RandomReal(rng, 8000);
  const MelFilterBank bank = MakeMelBank(512, 16000);
  const FeatureMatrix a = ExtractFeatures(wave, StftConfig{}, bank);
  const FeatureMatrix b = ExtractFeatures(wave, StftConfig{}, bank);
  ASSERT_EQ(a.rows(), 48);
  EXPECT_EQ(0, std::memcmp(a.data(), b.data(), sizeof(double) * a.size()));
}

TEST(FeatureFileTest, RoundTripAndCsv) {
  const auto dir = testing::ScratchDir("ncft");
  Rng rng(10);
  const FeatureMatrix m = RandomFeatures(rng, 6, 5);
  WriteFeatures(m, dir / "m.ncft");
  const FeatureMatrix back = ReadFeatures(dir / "m.ncft");
  ASSERT_EQ(back.rows(), 6);
  ASSERT_EQ(back.cols(), 5);
  EXPECT_EQ(back, m.cast<float>().cast<double>());
  FeatureMatrix small(2, 2);
  small << 1.5, -2, 0.25, 3;
  WriteFeatureCsv(small, dir / "s.csv");
  std::ifstream in(dir / "s.csv");
  std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_EQ(all, "1.5,-2\n0.25,3\n");
  std::ofstream(dir / "bad") << "XXXX";
  EXPECT_THROW(ReadFeatures(dir / "bad"), DataError);
}

}  // namespace
}  // namespace ncderev
