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


#ifndef NCDEREV_ROOM_H_
#define NCDEREV_ROOM_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ncderev/audio_io.h"
#include "ncderev/rng.h"

namespace ncderev {

using Vec3 = std::array<double, 3>;

inline constexpr double kSpeedOfSound = 343.0;

double Distance(const Vec3& a, const Vec3& b);

// Shoebox room with one source and one microphone.
struct RoomSpec {
  Vec3 dims{};  // length, width, height in meters
  Vec3 src{};
  Vec3 mic{};
  double rt60 = 0.6;
  int sample_rate = 16000;
  size_t max_rir_len = 0;  // 0 selects ceil(1.2 * rt60 * fs)

  double SourceMicDistance() const { return Distance(src, mic); }
  size_t EffectiveLength() const;
};

// Randomization ranges for sampled rooms. Defaults: dimensions within +-20%
// of nominal, rt60 in [0.4, 1.99] s, separation in [0.144, 2.816] m, both
// transducers >= 1 m from each wall and 1-2 m above the floor.
struct RoomSampling {
  Vec3 nominal_dims{7.95, 5.68, 4.5};
  double dim_spread = 0.2;
  double rt60_min = 0.4;
  double rt60_max = 1.99;
  double min_distance = 0.144;
  double max_distance = 2.816;
  double wall_margin = 1.0;
  double min_height = 1.0;
  double max_height = 2.0;
  int sample_rate = 16000;
  int max_attempts = 1000;
};

// Throws ConfigError naming the first violated constraint.
void ValidateSampledRoom(const RoomSpec& spec, const RoomSampling& sampling);

// Draws dimensions, rt60 and transducer positions. The separation is drawn
// uniformly and the microphone placed in a uniform random direction from the
// source; draws are repeated until every constraint holds. Throws
// ConfigError if the smallest admissible room cannot host the placement or
// no valid draw is found within max_attempts.
RoomSpec SampleRoom(Rng& rng, const RoomSampling& sampling);

// Specs for `count` rooms; room i is drawn from the stream DeriveSeed(seed, i)
// so any subset can be regenerated independently.
std::vector<RoomSpec> SampleRoomSet(uint64_t seed, size_t count,
                                    const RoomSampling& sampling);

// kSabine uses the classical diffuse-field formula. kLatticeMatched picks the absorption whose direction-averaged image-lattice
// decay has the requested T30; the image sum itself decays more slowly than
// the classical formulas predict because images along the long room axes
// undergo fewer reflections per unit distance, which makes Sabine RIRs run
// slightly long in elongated rooms.
enum class AbsorptionModel { kSabine, kLatticeMatched };
// "sabine" or "lattice-matched".
AbsorptionModel ParseAbsorptionModel(const std::string& name);

struct ImageMethodOptions {
  AbsorptionModel absorption = AbsorptionModel::kSabine;
  // Spread each image over an 8-tap Hann-windowed sinc instead of rounding
  // its delay to the nearest sample.
  bool fractional_delay = false;
  // Remove DC with the Allen-Berkley 100 Hz high-pass. Without it every image
  // adds a positive pulse and coincident images sum coherently, which
  // stretches the late decay.
  bool high_pass = true;
};

struct Rir {
  std::vector<double> taps;
  int sample_rate = 16000;
  RoomSpec spec;

  Waveform AsWaveform() const { return Waveform{taps, sample_rate}; }
};

// Uniform wall absorption coefficient reaching spec.rt60 under the model.
// Throws ConfigError if it falls outside (0, 1).
double WallAbsorption(const RoomSpec& spec, AbsorptionModel model);

// Allen-Berkley image method with frequency-independent, uniform reflection
// coefficient sqrt(1 - absorption). Images are summed while their delay is
// below the RIR length. Each image contributes beta^reflections / (4 pi d).
Rir ImageMethodRir(const RoomSpec& spec, const ImageMethodOptions& options = {});

std::vector<Rir> MakeRirSet(const std::vector<RoomSpec>& specs,
                            const ImageMethodOptions& options = {});

// Schroeder backward-integrated energy decay curve in dB re. total energy.
std::vector<double> SchroederCurveDb(const std::vector<double>& taps);

// RT60 from a least-squares line on the -5..-35 dB part of the decay curve
// (twice the time of a 30 dB drop). Throws DataError if the curve does not
// reach -40 dB or the fit window holds fewer than 10 samples.
double EstimateRt60(const std::vector<double>& taps, int sample_rate);
inline double EstimateRt60(const Rir& rir) {
  return EstimateRt60(rir.taps, rir.sample_rate);
}

// Maps utterance i to a RIR index. With `unique`, indices are drawn without
// replacement and ConfigError is thrown if there are fewer RIRs than
// utterances.
std::vector<size_t> AssignRirs(size_t num_utterances, size_t num_rirs,
                               uint64_t seed, bool unique);

Waveform Reverberate(const Waveform& clean, const Rir& rir);

// "NCIR" dump: magic, u32 tap count, f32 taps, then the RoomSpec as
// "key=value" lines.
void WriteRir(const Rir& rir, const std::filesystem::path& path);
Rir ReadRir(const std::filesystem::path& path);
// Two columns: time_s, amplitude.
void WriteRirCsv(const Rir& rir, const std::filesystem::path& path);

std::string FormatRoomSpec(const RoomSpec& spec);

}  // namespace ncderev

#endif  // NCDEREV_ROOM_H_
