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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "binary_io.h"
#include "ncderev/convolve.h"
#include "ncderev/error.h"

namespace ncderev {

namespace {

// Sabine/Eyring constant 24 ln(10) / c, about 0.161 s/m.
double DecayConstant() { return 24.0 * std::log(10.0) / kSpeedOfSound; }

struct PlacementBox {
  Vec3 lo;
  Vec3 hi;
};

PlacementBox BoxFor(const Vec3& dims, const RoomSampling& s) {
  PlacementBox box;
  box.lo = {s.wall_margin, s.wall_margin, s.min_height};
  box.hi = {dims[0] - s.wall_margin, dims[1] - s.wall_margin,
            std::min(s.max_height, dims[2] - s.wall_margin)};
  return box;
}

bool Inside(const Vec3& p, const PlacementBox& box) {
  for (int i = 0; i < 3; ++i) {
    if (p[i] < box.lo[i] || p[i] > box.hi[i]) return false;
  }
  return true;
}

std::string FormatVec(const Vec3& v) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g", v[0], v[1], v[2]);
  return buf;
}

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Vec3 ParseVec(const std::string& text) {
  Vec3 v{};
  if (std::sscanf(text.c_str(), "%lf,%lf,%lf", &v[0], &v[1], &v[2]) != 3) {
    throw DataError("malformed vector in RIR header: " + text);
  }
  return v;
}

// Decay constant C of the direction-averaged image lattice: with energy
// reflection factor beta^2 = 1 - alpha, the Schroeder T30 of the lattice is
// C / (-c ln(1 - alpha)). Images at distance ct in direction u have undergone
// ct * g(u) reflections, g(u) = sum_i |u_i| / L_i, so the energy arrival rate
// is proportional to the sphere integral of exp(-s g(u)), s = a t.
double LatticeDecayConstant(const Vec3& dims) {
  constexpr int kGrid = 96;
  std::vector<double> g;
  g.reserve(kGrid * kGrid);
  double g_mean = 0.0;
  for (int i = 0; i < kGrid; ++i) {
    const double uz = (i + 0.5) / kGrid;
    const double r = std::sqrt(1.0 - uz * uz);
    for (int j = 0; j < kGrid; ++j) {
      const double phi = (j + 0.5) / kGrid * 0.5 * std::numbers::pi;
      const double gv = r * std::cos(phi) / dims[0] + r * std::sin(phi) / dims[1] +
                        uz / dims[2];
      g.push_back(gv);
      g_mean += gv;
    }
  }
  g_mean /= static_cast<double>(g.size());
  // Schroeder integral of the arrival rate: F(s) = mean_u exp(-s g) / g.
  const auto schroeder = [&](double s) {
    double acc = 0.0;
    for (double gv : g) acc += std::exp(-s * gv) / gv;
    return acc;
  };
  const double f0 = schroeder(0.0);
  const double ds = 0.02 / g_mean;
  double st = 0.0, se = 0.0, stt = 0.0, ste = 0.0, count = 0.0;
  for (int step = 1; step < 20000; ++step) {
    const double s = step * ds;
    const double db = 10.0 * std::log10(schroeder(s) / f0);
    if (db < -35.0) break;
    if (db > -5.0) continue;
    st += s;
    se += db;
    stt += s * s;
    ste += s * db;
    count += 1.0;
  }
  const double slope = (count * ste - st * se) / (count * stt - st * st);
  return -60.0 / slope;
}

}  // namespace

double Distance(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

size_t RoomSpec::EffectiveLength() const {
  if (max_rir_len > 0) return max_rir_len;
  return static_cast<size_t>(std::ceil(1.2 * rt60 * sample_rate));
}

void ValidateSampledRoom(const RoomSpec& spec, const RoomSampling& sampling) {
  const PlacementBox box = BoxFor(spec.dims, sampling);
  if (!Inside(spec.src, box)) {
    throw ConfigError("source violates wall/height margins");
  }
  if (!Inside(spec.mic, box)) {
    throw ConfigError("microphone violates wall/height margins");
  }
  const double d = spec.SourceMicDistance();
  if (d < sampling.min_distance || d > sampling.max_distance) {
    throw ConfigError("source-microphone distance " + FormatDouble(d) +
                      " m out of range");
  }
  if (spec.rt60 < sampling.rt60_min || spec.rt60 > sampling.rt60_max) {
    throw ConfigError("rt60 " + FormatDouble(spec.rt60) + " s out of range");
  }
}

RoomSpec SampleRoom(Rng& rng, const RoomSampling& sampling) {
  for (double d : sampling.nominal_dims) {
    if (!(d > 0.0)) throw ConfigError("nominal room dimensions must be positive");
  }
  // Every room in the dimension range must admit a valid placement, so the
  // check runs on the smallest one.
  Vec3 smallest;
  for (int i = 0; i < 3; ++i) {
    smallest[i] = (1.0 - sampling.dim_spread) * sampling.nominal_dims[i];
  }
  const PlacementBox tight = BoxFor(smallest, sampling);
  double diagonal2 = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double extent = tight.hi[i] - tight.lo[i];
    if (extent < 0.0) {
      throw ConfigError("infeasible room: nominal dimensions too small for the "
                        "wall and height margins");
    }
    diagonal2 += extent * extent;
  }
  if (std::sqrt(diagonal2) < sampling.min_distance) {
    throw ConfigError("infeasible room: placement region cannot separate "
                      "source and microphone by the minimum distance");
  }

  RoomSpec spec;
  spec.sample_rate = sampling.sample_rate;
  for (int i = 0; i < 3; ++i) {
    spec.dims[i] = sampling.nominal_dims[i] *
                   rng.Uniform(1.0 - sampling.dim_spread, 1.0 + sampling.dim_spread);
  }
  spec.rt60 = rng.Uniform(sampling.rt60_min, sampling.rt60_max);
  const PlacementBox box = BoxFor(spec.dims, sampling);
  for (int attempt = 0; attempt < sampling.max_attempts; ++attempt) {
    for (int i = 0; i < 3; ++i) spec.src[i] = rng.Uniform(box.lo[i], box.hi[i]);
    const double d = rng.Uniform(sampling.min_distance, sampling.max_distance);
    const double cos_theta = rng.Uniform(-1.0, 1.0);
    const double phi = rng.Uniform(0.0, 2.0 * std::numbers::pi);
    const double sin_theta = std::sqrt(1.0 - cos_theta * cos_theta);
    spec.mic = {spec.src[0] + d * sin_theta * std::cos(phi),
                spec.src[1] + d * sin_theta * std::sin(phi),
                spec.src[2] + d * cos_theta};
    if (Inside(spec.mic, box)) return spec;
  }
  throw ConfigError("could not place source and microphone after " +
                    std::to_string(sampling.max_attempts) + " attempts");
}

std::vector<RoomSpec> SampleRoomSet(uint64_t seed, size_t count,
                                    const RoomSampling& sampling) {
  if (count == 0) throw ConfigError("room count must be at least 1");
  std::vector<RoomSpec> specs;
  specs.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    Rng rng(DeriveSeed(seed, i));
    specs.push_back(SampleRoom(rng, sampling));
  }
  return specs;
}

AbsorptionModel ParseAbsorptionModel(const std::string& name) {
  if (name == "sabine") return AbsorptionModel::kSabine;
  if (name == "lattice-matched") return AbsorptionModel::kLatticeMatched;
  throw ConfigError("unknown absorption model: " + name);
}

double WallAbsorption(const RoomSpec& spec, AbsorptionModel model) {
  if (!(spec.rt60 > 0.0)) throw ConfigError("rt60 must be positive");
  const auto& d = spec.dims;
  const double volume = d[0] * d[1] * d[2];
  const double surface = 2.0 * (d[0] * d[1] + d[0] * d[2] + d[1] * d[2]);
  const double x = DecayConstant() * volume / (surface * spec.rt60);
  double alpha = 0.0;
  switch (model) {
    case AbsorptionModel::kSabine:
      alpha = x;
      break;
    case AbsorptionModel::kLatticeMatched:
      alpha = 1.0 - std::exp(-LatticeDecayConstant(d) / (kSpeedOfSound * spec.rt60));
      break;
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ConfigError("rt60 " + FormatDouble(spec.rt60) +
                      " s unreachable for this room: required absorption " +
                      FormatDouble(alpha));
  }
  return alpha;
}

Rir ImageMethodRir(const RoomSpec& spec, const ImageMethodOptions& options) {
  for (int i = 0; i < 3; ++i) {
    if (!(spec.dims[i] > 0.0)) throw ConfigError("room dimensions must be positive");
    if (spec.src[i] <= 0.0 || spec.src[i] >= spec.dims[i] ||
        spec.mic[i] <= 0.0 || spec.mic[i] >= spec.dims[i]) {
      throw ConfigError("source and microphone must lie strictly inside the room");
    }
  }
  if (spec.sample_rate <= 0) throw ConfigError("sample rate must be positive");
  const double beta = std::sqrt(1.0 - WallAbsorption(spec, options.absorption));
  const size_t len = spec.EffectiveLength();

  Rir rir;
  rir.sample_rate = spec.sample_rate;
  rir.spec = spec;
  rir.taps.assign(len, 0.0);

  const double samples_per_meter = spec.sample_rate / kSpeedOfSound;
  const double max_dist = static_cast<double>(len) / samples_per_meter;
  int reach[3];
  for (int i = 0; i < 3; ++i) {
    reach[i] = static_cast<int>(std::ceil(max_dist / (2.0 * spec.dims[i]))) + 1;
  }
  // beta^k for every reflection count that can occur.
  std::vector<double> beta_pow(2 * (reach[0] + reach[1] + reach[2]) + 8, 1.0);
  for (size_t k = 1; k < beta_pow.size(); ++k) beta_pow[k] = beta_pow[k - 1] * beta;

  const double inv_4pi = 1.0 / (4.0 * std::numbers::pi);
  for (int u = 0; u <= 1; ++u) {
    for (int l = -reach[0]; l <= reach[0]; ++l) {
      const double dx = (1 - 2 * u) * spec.src[0] + 2.0 * l * spec.dims[0] - spec.mic[0];
      const int nx = std::abs(l - u) + std::abs(l);
      if (std::abs(dx) > max_dist) continue;
      for (int v = 0; v <= 1; ++v) {
        for (int m = -reach[1]; m <= reach[1]; ++m) {
          const double dy = (1 - 2 * v) * spec.src[1] + 2.0 * m * spec.dims[1] - spec.mic[1];
          const int ny = std::abs(m - v) + std::abs(m);
          const double dxy2 = dx * dx + dy * dy;
          if (dxy2 > max_dist * max_dist) continue;
          for (int w = 0; w <= 1; ++w) {
            for (int n = -reach[2]; n <= reach[2]; ++n) {
              const double dz = (1 - 2 * w) * spec.src[2] + 2.0 * n * spec.dims[2] - spec.mic[2];
              const double dist = std::sqrt(dxy2 + dz * dz);
              const double delay = dist * samples_per_meter;
              if (delay >= static_cast<double>(len)) continue;
              const int nz = std::abs(n - w) + std::abs(n);
              const double gain = beta_pow[nx + ny + nz] * inv_4pi / dist;
              if (!options.fractional_delay) {
                const auto idx = static_cast<size_t>(std::lround(delay));
                if (idx < len) rir.taps[idx] += gain;
                continue;
              }
              const auto base = static_cast<long>(std::floor(delay));
              for (long i = base - 3; i <= base + 4; ++i) {
                if (i < 0 || i >= static_cast<long>(len)) continue;
                const double x = static_cast<double>(i) - delay;
                if (std::abs(x) >= 4.0) continue;
                const double sinc =
                    x == 0.0 ? 1.0
                             : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
                const double window = 0.5 * (1.0 + std::cos(std::numbers::pi * x / 4.0));
                rir.taps[static_cast<size_t>(i)] += gain * sinc * window;
              }
            }
          }
        }
      }
    }
  }
  if (options.high_pass) {
    // Allen-Berkley DC-removal filter with a 100 Hz corner.
    const double w = 2.0 * std::numbers::pi * 100.0 / spec.sample_rate;
    const double r1 = std::exp(-w);
    const double b1 = 2.0 * r1 * std::cos(w);
    const double b2 = -r1 * r1;
    const double a1 = -(1.0 + r1);
    double y1 = 0.0, y2 = 0.0;
    for (double& tap : rir.taps) {
      const double y0 = b1 * y1 + b2 * y2 + tap;
      tap = y0 + a1 * y1 + r1 * y2;
      y2 = y1;
      y1 = y0;
    }
  }
  return rir;
}

std::vector<Rir> MakeRirSet(const std::vector<RoomSpec>& specs,
                            const ImageMethodOptions& options) {
  std::vector<Rir> rirs;
  rirs.reserve(specs.size());
  for (const auto& spec : specs) rirs.push_back(ImageMethodRir(spec, options));
  return rirs;
}

std::vector<double> SchroederCurveDb(const std::vector<double>& taps) {
  std::vector<double> edc(taps.size());
  double acc = 0.0;
  for (size_t i = taps.size(); i-- > 0;) {
    acc += taps[i] * taps[i];
    edc[i] = acc;
  }
  if (taps.empty() || !(acc > 0.0)) throw DataError("RIR has no energy");
  for (double& e : edc) {
    e = e > 0.0 ? 10.0 * std::log10(e / acc) : -std::numeric_limits<double>::infinity();
  }
  return edc;
}

double EstimateRt60(const std::vector<double>& taps, int sample_rate) {
  const std::vector<double> edc = SchroederCurveDb(taps);
  const auto first_below = [&](double level) {
    return static_cast<size_t>(
        std::find_if(edc.begin(), edc.end(), [&](double e) { return e <= level; }) -
        edc.begin());
  };
  const size_t start = first_below(-5.0);
  const size_t stop = first_below(-35.0);
  const size_t floor40 = first_below(-40.0);
  if (floor40 == edc.size() || stop >= edc.size() || stop < start + 10) {
    throw DataError("insufficient decay range for RT60 estimation");
  }
  // Least-squares line through (t, dB) on [start, stop).
  const double fs = sample_rate;
  double st = 0.0, se = 0.0, stt = 0.0, ste = 0.0;
  const double count = static_cast<double>(stop - start);
  for (size_t i = start; i < stop; ++i) {
    const double t = static_cast<double>(i) / fs;
    st += t;
    se += edc[i];
    stt += t * t;
    ste += t * edc[i];
  }
  const double slope = (count * ste - st * se) / (count * stt - st * st);
  if (!(slope < 0.0)) throw NumericalError("non-decaying energy curve");
  return -60.0 / slope;
}

std::vector<size_t> AssignRirs(size_t num_utterances, size_t num_rirs,
                               uint64_t seed, bool unique) {
  if (num_rirs == 0) throw ConfigError("no RIRs available");
  Rng rng(seed);
  if (unique) {
    if (num_rirs < num_utterances) {
      throw ConfigError("need at least " + std::to_string(num_utterances) +
                        " RIRs for unique assignment, have " +
                        std::to_string(num_rirs));
    }
    std::vector<size_t> order(num_rirs);
    for (size_t i = 0; i < num_rirs; ++i) order[i] = i;
    rng.Shuffle(order);
    order.resize(num_utterances);
    return order;
  }
  std::vector<size_t> out(num_utterances);
  for (auto& idx : out) idx = static_cast<size_t>(rng.UniformIndex(num_rirs));
  return out;
}

Waveform Reverberate(const Waveform& clean, const Rir& rir) {
  return Convolve(clean, rir.AsWaveform());
}

std::string FormatRoomSpec(const RoomSpec& spec) {
  std::ostringstream out;
  out << "dims=" << FormatVec(spec.dims) << "\n"
      << "src=" << FormatVec(spec.src) << "\n"
      << "mic=" << FormatVec(spec.mic) << "\n"
      << "rt60=" << FormatDouble(spec.rt60) << "\n"
      << "sample_rate=" << spec.sample_rate << "\n"
      << "max_rir_len=" << spec.max_rir_len << "\n";
  return out.str();
}

void WriteRir(const Rir& rir, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  internal::WriteMagic(out, "NCIR");
  internal::WriteLE<uint32_t>(out, static_cast<uint32_t>(rir.taps.size()));
  for (double t : rir.taps) internal::WriteLE<float>(out, static_cast<float>(t));
  out << FormatRoomSpec(rir.spec);
  if (!out) throw DataError("write failed: " + path.string());
}

Rir ReadRir(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open RIR file: " + path.string());
  internal::ExpectMagic(in, "NCIR");
  const auto count = internal::ReadLE<uint32_t>(in);
  Rir rir;
  rir.taps.resize(count);
  for (double& t : rir.taps) t = internal::ReadLE<float>(in);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "dims") rir.spec.dims = ParseVec(value);
    else if (key == "src") rir.spec.src = ParseVec(value);
    else if (key == "mic") rir.spec.mic = ParseVec(value);
    else if (key == "rt60") rir.spec.rt60 = std::stod(value);
    else if (key == "sample_rate") rir.spec.sample_rate = std::stoi(value);
    else if (key == "max_rir_len") rir.spec.max_rir_len = std::stoul(value);
  }
  rir.sample_rate = rir.spec.sample_rate;
  return rir;
}

void WriteRirCsv(const Rir& rir, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << "time_s,amplitude\n";
  char buf[64];
  for (size_t i = 0; i < rir.taps.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.9g,%.9g\n",
                  static_cast<double>(i) / rir.sample_rate, rir.taps[i]);
    out << buf;
  }
}

}  // namespace ncderev
