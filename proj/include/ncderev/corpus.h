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


#ifndef NCDEREV_CORPUS_H_
#define NCDEREV_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ncderev/audio_io.h"
#include "ncderev/rng.h"
#include "ncderev/room.h"

namespace ncderev {

// Speech-like test signal: syllables of voiced harmonic complexes with
// gliding pitch and three formant resonances, interleaved with fricative noise
// bursts and short pauses, over a low white noise floor.
struct SynthConfig {
  double duration_s = 2.5;
  int sample_rate = 16000;
  double rms = 0.05;
  double noise_floor_db = -60.0;  // relative to rms

  void Validate() const;
};

Waveform SynthesizeUtterance(Rng& rng, const SynthConfig& config = {});

// Writes utt0000.wav, utt0001.wav, ... with DeriveSeed(seed, i) per file.
std::vector<std::filesystem::path> WriteSyntheticUtterances(
    const std::filesystem::path& dir, size_t count, uint64_t seed,
    const SynthConfig& config = {});

enum class Split { kTrain, kDev, kTest };
std::string SplitName(Split split);

// FNV-1a of the utterance id, bucketed 80/10/10.
Split SplitOf(const std::string& utterance_id);

struct CorpusEntry {
  std::string id;
  Waveform clean;
  Waveform reverb;  // full convolution, scaled to the clean RMS
  size_t rir_index = 0;
  RoomSpec room;
  Split split = Split::kTrain;
};

// Convolves each clean utterance with a sampled RIR. Rooms come from
// SampleRoomSet(seed, num_rirs) and are assigned with AssignRirs(.., seed,
// unique_rirs).
std::vector<CorpusEntry> BuildCorpus(const std::vector<std::string>& ids,
                                     const std::vector<Waveform>& clean,
                                     const RoomSampling& sampling,
                                     const ImageMethodOptions& options, uint64_t seed,
                                     size_t num_rirs, bool unique_rirs = true,
                                     int jobs = 1);

// Synthetic clean speech plus BuildCorpus in one call; ids are utt0000...
std::vector<CorpusEntry> BuildSyntheticCorpus(size_t count, uint64_t seed,
                                              const RoomSampling& sampling,
                                              const SynthConfig& synth = {},
                                              int jobs = 1);

// Columns: utterance, rir_id, rt60, distance, split.
void WriteManifestCsv(const std::vector<CorpusEntry>& corpus,
                      const std::filesystem::path& path);

}  // namespace ncderev

#endif  // NCDEREV_CORPUS_H_
