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


#include "ncderev/room.h"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <set>
#include <tuple>

#include "ncderev/error.h"
#include "test_util.h"

namespace ncderev {
namespace {

RoomSpec CenteredSpec(double rt60) {
  RoomSpec spec;
  spec.dims = {7.95, 5.68, 4.5};
  spec.src = {3.0, 2.5, 1.5};
  spec.mic = {4.2, 3.1, 1.6};
  spec.rt60 = rt60;
  return spec;
}

TEST(SampleRoomTest, DimensionsWithinTwentyPercent) {
  const RoomSampling sampling;
  for (uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    const RoomSpec spec = SampleRoom(rng, sampling);
    EXPECT_GE(spec.dims[0], 6.36);
    EXPECT_LE(spec.dims[0], 9.54);
    EXPECT_GE(spec.dims[1], 4.544);
    EXPECT_LE(spec.dims[1], 6.816);
    EXPECT_GE(spec.dims[2], 3.6);
    EXPECT_LE(spec.dims[2], 5.4);
  }
}

TEST(SampleRoomTest, GeometricInvariantsHoldOverManySeeds) {
  const RoomSampling sampling;
  for (uint64_t seed = 0; seed < 10000; ++seed) {
    Rng rng(DeriveSeed(99, seed));
    const RoomSpec spec = SampleRoom(rng, sampling);
    const double d = spec.SourceMicDistance();
    ASSERT_GE(d, 0.144);
    ASSERT_LE(d, 2.816);
    ASSERT_GE(spec.rt60, 0.4);
    ASSERT_LE(spec.rt60, 1.99);
    for (const Vec3& p : {spec.src, spec.mic}) {
      ASSERT_GE(p[0], 1.0);
      ASSERT_LE(p[0], spec.dims[0] - 1.0);
      ASSERT_GE(p[1], 1.0);
      ASSERT_LE(p[1], spec.dims[1] - 1.0);
      ASSERT_GE(p[2], 1.0);
      ASSERT_LE(p[2], 2.0);
    }
    ASSERT_NO_THROW(ValidateSampledRoom(spec, sampling));
  }
}

TEST(SampleRoomTest, SmallNominalRoomIsInfeasible) {
  RoomSampling sampling;
  sampling.nominal_dims = {2.5, 2.5, 2.5};
  Rng rng(1);
  EXPECT_THROW(SampleRoom(rng, sampling), ConfigError);
}

TEST(SampleRoomTest, NonPositiveNominalRejected) {
  RoomSampling sampling;
  sampling.nominal_dims = {7.0, 0.0, 3.0};
  Rng rng(1);
  EXPECT_THROW(SampleRoom(rng, sampling), ConfigError);
}

TEST(SampleRoomSetTest, DeterministicAndSeedSensitive) {
  const RoomSampling sampling;
  const auto a = SampleRoomSet(5, 1, sampling);
  const auto b = SampleRoomSet(5, 1, sampling);
  const auto c = SampleRoomSet(6, 1, sampling);
  EXPECT_EQ(FormatRoomSpec(a[0]), FormatRoomSpec(b[0]));
  EXPECT_NE(FormatRoomSpec(a[0]), FormatRoomSpec(c[0]));
}

TEST(SampleRoomSetTest, EightThousandRoomSetIsDistinct) {
  const auto specs = SampleRoomSet(2024, 8000, RoomSampling{});
  ASSERT_EQ(specs.size(), 8000u);
  std::set<std::string> unique;
  for (const auto& s : specs) unique.insert(FormatRoomSpec(s));
  EXPECT_EQ(unique.size(), 8000u);
}

TEST(ImageMethodTest, DirectPathDelay) {
  const RoomSpec spec = CenteredSpec(0.5);
  const Rir rir = ImageMethodRir(spec, {.high_pass = false});
  size_t first = 0;
  while (rir.taps[first] == 0.0) ++first;
  const double expected = spec.SourceMicDistance() / kSpeedOfSound * spec.sample_rate;
  EXPECT_LE(std::abs(static_cast<double>(first) - std::round(expected)), 2.0);
}

TEST(ImageMethodTest, DirectPathPeakWithHighPass) {
  const RoomSpec spec = CenteredSpec(0.5);
  const Rir rir = ImageMethodRir(spec);
  size_t peak = 0;
  for (size_t i = 1; i < rir.taps.size(); ++i) {
    if (std::abs(rir.taps[i]) > std::abs(rir.taps[peak])) peak = i;
  }
  const double expected = spec.SourceMicDistance() / kSpeedOfSound * spec.sample_rate;
  EXPECT_LE(std::abs(static_cast<double>(peak) - std::round(expected)), 2.0);
}

TEST(ImageMethodTest, DefaultLengthIsOnePointTwoRt60) {
  const RoomSpec spec = CenteredSpec(0.6);
  EXPECT_EQ(ImageMethodRir(spec).taps.size(), 11520u);
}

TEST(ImageMethodTest, AnechoicLimit) {
  // Absorption close to 1: beyond the direct path and the six first-order
  // images almost nothing is left.
  RoomSpec spec = CenteredSpec(0.02);
  spec.max_rir_len = 8000;
  const ImageMethodOptions options{.absorption = AbsorptionModel::kLatticeMatched,
                                   .high_pass = false};
  EXPECT_GT(WallAbsorption(spec, options.absorption), 0.99);
  const Rir rir = ImageMethodRir(spec, options);
  // Arrival time of the latest first-order image.
  double latest = 0.0;
  for (int axis = 0; axis < 3; ++axis) {
    for (double wall : {0.0, spec.dims[axis]}) {
      Vec3 image = spec.src;
      image[axis] = 2.0 * wall - spec.src[axis];
      latest = std::max(latest, Distance(image, spec.mic));
    }
  }
  const auto cutoff =
      static_cast<size_t>(std::round(latest / kSpeedOfSound * spec.sample_rate)) + 1;
  double total = 0.0, late = 0.0;
  for (size_t i = 0; i < rir.taps.size(); ++i) {
    total += rir.taps[i] * rir.taps[i];
    if (i > cutoff) late += rir.taps[i] * rir.taps[i];
  }
  EXPECT_LT(late / total, 0.01);
}

TEST(ImageMethodTest, SabineUnreachableRt60IsError) {
  RoomSpec spec = CenteredSpec(0.05);
  EXPECT_THROW(ImageMethodRir(spec, {.absorption = AbsorptionModel::kSabine}), ConfigError);
}

TEST(ImageMethodTest, TransducerOutsideRoomIsError) {
  RoomSpec spec = CenteredSpec(0.5);
  spec.mic = {9.0, 1.0, 1.0};
  EXPECT_THROW(ImageMethodRir(spec), ConfigError);
}

TEST(ImageMethodTest, Rt60MatchesTarget) {
  const RoomSpec spec = CenteredSpec(0.6);
  const double estimate = EstimateRt60(ImageMethodRir(spec));
  EXPECT_NEAR(estimate, 0.6, 0.12);
}

TEST(ImageMethodTest, LatticeMatchedModelMatchesTarget) {
  const RoomSpec spec = CenteredSpec(0.8);
  const double estimate =
      EstimateRt60(ImageMethodRir(spec, {.absorption = AbsorptionModel::kLatticeMatched}));
  EXPECT_NEAR(estimate, 0.8, 0.16);
}

TEST(ImageMethodTest, FractionalDelayKeepsDecay) {
  const RoomSpec spec = CenteredSpec(0.6);
  const Rir rir = ImageMethodRir(spec, {.fractional_delay = true});
  EXPECT_NEAR(EstimateRt60(rir), 0.6, 0.12);
}

TEST(ImageMethodTest, DeterministicBitIdentical) {
  const auto spec = SampleRoomSet(77, 1, RoomSampling{})[0];
  const Rir a = ImageMethodRir(spec);
  const Rir b = ImageMethodRir(spec);
  ASSERT_EQ(a.taps.size(), b.taps.size());
  EXPECT_EQ(0, std::memcmp(a.taps.data(), b.taps.data(), a.taps.size() * sizeof(double)));
}

TEST(SchroederTest, CurveIsNonIncreasing) {
  const Rir rir = ImageMethodRir(CenteredSpec(0.7));
  const auto edc = SchroederCurveDb(rir.taps);
  EXPECT_EQ(edc[0], 0.0);
  for (size_t i = 1; i < edc.size(); ++i) ASSERT_LE(edc[i], edc[i - 1]);
}

TEST(EstimateRt60Test, ConstructedExponentialDecay) {
  for (double t60 : {0.3, 0.6, 1.2}) {
    const int fs = 16000;
    std::vector<double> taps(static_cast<size_t>(2.0 * t60 * fs));
    for (size_t i = 0; i < taps.size(); ++i) {
      // Amplitude falls 60 dB (a factor 1000) every t60 seconds.
      taps[i] = std::exp(-std::log(1000.0) * static_cast<double>(i) / (t60 * fs));
    }
    EXPECT_NEAR(EstimateRt60(taps, fs), t60, 0.02 * t60);
  }
}

TEST(EstimateRt60Test, UnitImpulseHasNoDecayRange) {
  std::vector<double> taps(1000, 0.0);
  taps[0] = 1.0;
  EXPECT_THROW(EstimateRt60(taps, 16000), DataError);
}

TEST(EstimateRt60Test, ZeroEnergyIsError) {
  EXPECT_THROW(EstimateRt60(std::vector<double>(100, 0.0), 16000), DataError);
}

TEST(EstimateRt60Test, GeneratedRirAtOneSecond) {
  RoomSpec spec = CenteredSpec(1.0);
  EXPECT_NEAR(EstimateRt60(ImageMethodRir(spec)), 1.0, 0.2);
}

TEST(AssignRirsTest, UniqueAssignment) {
  const auto a = AssignRirs(10, 10, 3, true);
  std::set<size_t> s(a.begin(), a.end());
  EXPECT_EQ(s.size(), 10u);
  EXPECT_EQ(a, AssignRirs(10, 10, 3, true));
}

TEST(AssignRirsTest, TooFewRirsForUniqueness) {
  EXPECT_THROW(AssignRirs(10, 5, 3, true), ConfigError);
  EXPECT_NO_THROW(AssignRirs(10, 5, 3, false));
}

TEST(RirFileTest, DumpRoundTrip) {
  const auto dir = testing::ScratchDir("ncir");
  const auto spec = SampleRoomSet(8, 1, RoomSampling{})[0];
  const Rir rir = ImageMethodRir(spec);
  WriteRir(rir, dir / "a.ncir");
  const Rir back = ReadRir(dir / "a.ncir");
  ASSERT_EQ(back.taps.size(), rir.taps.size());
  for (size_t i = 0; i < rir.taps.size(); ++i) {
    ASSERT_EQ(back.taps[i], static_cast<float>(rir.taps[i]));
  }
  EXPECT_EQ(FormatRoomSpec(back.spec), FormatRoomSpec(rir.spec));
  WriteRirCsv(rir, dir / "a.csv");
  EXPECT_TRUE(std::filesystem::exists(dir / "a.csv"));
}

}  // namespace
}  // namespace ncderev
