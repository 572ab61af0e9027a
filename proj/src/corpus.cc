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


#include "ncderev/corpus.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "ncderev/error.h"
#include "ncderev/parallel.h"

namespace ncderev {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double Rms(const std::vector<double>& x, size_t count) {
  count = std::min(count, x.size());
  double e = 0.0;
  for (size_t i = 0; i < count; ++i) e += x[i] * x[i];
  return count == 0 ? 0.0 : std::sqrt(e / static_cast<double>(count));
}

// Raised-cosine attack and release over `ramp` samples.
double Envelope(size_t i, size_t length, size_t ramp) {
  const size_t edge = std::min(i, length - 1 - i);
  if (edge >= ramp) return 1.0;
  return 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(edge) / ramp);
}

void AddVoiced(Rng& rng, std::vector<double>& out, size_t start, size_t length, int fs) {
  const double f0_start = rng.Uniform(90.0, 220.0);
  const double f0_end = f0_start * rng.Uniform(0.75, 1.3);
  const double formants[3] = {rng.Uniform(300.0, 900.0), rng.Uniform(900.0, 2500.0),
                              rng.Uniform(2400.0, 3500.0)};
  const double widths[3] = {rng.Uniform(60.0, 120.0), rng.Uniform(80.0, 160.0),
                            rng.Uniform(120.0, 220.0)};
  const double nyquist_guard = 0.45 * fs;
  const int harmonics = static_cast<int>(nyquist_guard / std::min(f0_start, f0_end));
  std::vector<double> phase(harmonics, 0.0);
  for (auto& ph : phase) ph = rng.Uniform(0.0, kTwoPi);
  const size_t ramp = static_cast<size_t>(0.02 * fs);
  for (size_t i = 0; i < length && start + i < out.size(); ++i) {
    const double frac = static_cast<double>(i) / length;
    const double f0 = f0_start + (f0_end - f0_start) * frac;
    double v = 0.0;
    for (int h = 1; h <= harmonics; ++h) {
      const double f = h * f0;
      if (f >= nyquist_guard) break;
      double gain = 0.0;
      for (int m = 0; m < 3; ++m) {
        const double d = (f - formants[m]) / widths[m];
        gain += 1.0 / (1.0 + d * d) / (m + 1);
      }
      phase[h - 1] += kTwoPi * f / fs;
      v += gain / std::sqrt(static_cast<double>(h)) * std::sin(phase[h - 1]);
    }
    out[start + i] += v * Envelope(i, length, ramp);
  }
}

void AddFricative(Rng& rng, std::vector<double>& out, size_t start, size_t length, int fs) {
  // First-difference colored noise, brighter than the voiced segments.
  const double level = rng.Uniform(0.2, 0.5);
  const size_t ramp = static_cast<size_t>(0.01 * fs);
  double prev = 0.0;
  for (size_t i = 0; i < length && start + i < out.size(); ++i) {
    const double w = rng.Normal();
    out[start + i] += level * (w - 0.7 * prev) * Envelope(i, length, ramp);
    prev = w;
  }
}

}  // namespace

void SynthConfig::Validate() const {
  if (!(duration_s > 0.1)) throw ConfigError("synthetic duration must exceed 0.1 s");
  if (sample_rate < 8000) throw ConfigError("synthetic sample rate must be >= 8000");
  if (!(rms > 0.0)) throw ConfigError("synthetic rms must be positive");
}

Waveform SynthesizeUtterance(Rng& rng, const SynthConfig& config) {
  config.Validate();
  const int fs = config.sample_rate;
  Waveform wave;
  wave.sample_rate = fs;
  wave.samples.assign(static_cast<size_t>(config.duration_s * fs), 0.0);
  size_t pos = static_cast<size_t>(rng.Uniform(0.05, 0.15) * fs);
  while (pos < wave.samples.size()) {
    const bool voiced = rng.Uniform() < 0.75;
    const size_t length = static_cast<size_t>(
        (voiced ? rng.Uniform(0.12, 0.3) : rng.Uniform(0.06, 0.15)) * fs);
    if (voiced) {
      AddVoiced(rng, wave.samples, pos, length, fs);
    } else {
      AddFricative(rng, wave.samples, pos, length, fs);
    }
    pos += length + static_cast<size_t>(rng.Uniform(0.02, 0.12) * fs);
  }
  const double rms = Rms(wave.samples, wave.samples.size());
  const double scale = rms > 0.0 ? config.rms / rms : 0.0;
  const double floor = config.rms * std::pow(10.0, config.noise_floor_db / 20.0);
  for (auto& s : wave.samples) s = s * scale + floor * rng.Normal();
  return wave;
}

std::vector<std::filesystem::path> WriteSyntheticUtterances(const std::filesystem::path& dir,
                                                            size_t count, uint64_t seed,
                                                            const SynthConfig& config) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> paths;
  char name[32];
  for (size_t i = 0; i < count; ++i) {
    Rng rng(DeriveSeed(seed, i));
    std::snprintf(name, sizeof(name), "utt%04zu.wav", i);
    paths.push_back(dir / name);
    WriteWav(SynthesizeUtterance(rng, config), paths.back());
  }
  return paths;
}

std::string SplitName(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "train";
}

Split SplitOf(const std::string& utterance_id) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : utterance_id) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  const uint64_t bucket = h % 10;
  if (bucket < 8) return Split::kTrain;
  return bucket == 8 ? Split::kDev : Split::kTest;
}

std::vector<CorpusEntry> BuildCorpus(const std::vector<std::string>& ids,
                                     const std::vector<Waveform>& clean,
                                     const RoomSampling& sampling,
                                     const ImageMethodOptions& options, uint64_t seed,
                                     size_t num_rirs, bool unique_rirs, int jobs) {
  if (ids.size() != clean.size()) throw DataError("id and waveform counts differ");
  if (clean.empty()) throw DataError("no clean utterances");
  const auto assignment = AssignRirs(clean.size(), num_rirs, seed, unique_rirs);
  const auto rooms = SampleRoomSet(seed, num_rirs, sampling);
  std::vector<CorpusEntry> corpus(clean.size());
  ParallelFor(clean.size(), jobs, [&](size_t i) {
    if (clean[i].sample_rate != sampling.sample_rate) {
      throw DataError(ids[i] + ": sample rate " + std::to_string(clean[i].sample_rate) +
                      " differs from " + std::to_string(sampling.sample_rate));
    }
    CorpusEntry& e = corpus[i];
    e.id = ids[i];
    e.clean = clean[i];
    e.rir_index = assignment[i];
    e.room = rooms[e.rir_index];
    e.split = SplitOf(e.id);
    e.reverb = Reverberate(e.clean, ImageMethodRir(e.room, options));
    const double target = Rms(e.clean.samples, e.clean.size());
    const double actual = Rms(e.reverb.samples, e.clean.size());
    if (actual > 0.0) {
      for (auto& s : e.reverb.samples) s *= target / actual;
    }
  });
  return corpus;
}

std::vector<CorpusEntry> BuildSyntheticCorpus(size_t count, uint64_t seed,
                                              const RoomSampling& sampling,
                                              const SynthConfig& synth, int jobs) {
  std::vector<std::string> ids(count);
  std::vector<Waveform> clean(count);
  char name[32];
  for (size_t i = 0; i < count; ++i) {
    std::snprintf(name, sizeof(name), "utt%04zu", i);
    ids[i] = name;
    Rng rng(DeriveSeed(seed, i));
    clean[i] = SynthesizeUtterance(rng, synth);
  }
  return BuildCorpus(ids, clean, sampling, {}, DeriveSeed(seed, 1u << 20), count, true, jobs);
}

void WriteManifestCsv(const std::vector<CorpusEntry>& corpus,
                      const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << "utterance,rir_id,rt60,distance,split\n";
  char buf[96];
  for (const CorpusEntry& e : corpus) {
    std::snprintf(buf, sizeof(buf), ",%zu,%.6f,%.6f,", e.rir_index, e.room.rt60,
                  e.room.SourceMicDistance());
    out << e.id << buf << SplitName(e.split) << '\n';
  }
}

}  // namespace ncderev
