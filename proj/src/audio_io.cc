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


#include "ncderev/audio_io.h"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>

#include "binary_io.h"
#include "ncderev/error.h"

namespace ncderev {

using internal::ReadLE;
using internal::WriteLE;

namespace {

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatExtensible = 0xFFFE;

std::string FourCC(std::istream& in) {
  char id[4];
  if (!in.read(id, 4)) throw DataError("truncated RIFF chunk header");
  return std::string(id, 4);
}

}  // namespace

Waveform ReadWav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open WAV file: " + path.string());
  const std::string where = " (" + path.string() + ")";

  if (FourCC(in) != "RIFF") throw DataError("not a RIFF file" + where);
  ReadLE<uint32_t>(in);
  if (FourCC(in) != "WAVE") throw DataError("not a WAVE file" + where);

  bool have_fmt = false;
  uint16_t channels = 0;
  uint16_t bits = 0;
  uint32_t rate = 0;
  while (true) {
    const std::string id = FourCC(in);
    const uint32_t size = ReadLE<uint32_t>(in);
    if (id == "fmt ") {
      if (size < 16) throw DataError("malformed fmt chunk" + where);
      uint16_t format = ReadLE<uint16_t>(in);
      channels = ReadLE<uint16_t>(in);
      rate = ReadLE<uint32_t>(in);
      ReadLE<uint32_t>(in);  // byte rate
      ReadLE<uint16_t>(in);  // block align
      bits = ReadLE<uint16_t>(in);
      uint32_t consumed = 16;
      if (format == kFormatExtensible && size >= 40) {
        ReadLE<uint16_t>(in);  // cbSize
        ReadLE<uint16_t>(in);  // valid bits
        ReadLE<uint32_t>(in);  // channel mask
        format = ReadLE<uint16_t>(in);
        consumed += 10;
      }
      in.ignore(size - consumed + (size & 1));
      if (format != kFormatPcm || bits != 16) {
        throw DataError("unsupported encoding: format " +
                        std::to_string(format) + ", " + std::to_string(bits) +
                        " bits; only 16-bit PCM is supported" + where);
      }
      if (channels != 1) {
        throw DataError("multichannel input: " + std::to_string(channels) +
                        " channels; only mono is supported" + where);
      }
      if (rate == 0) throw DataError("zero sample rate" + where);
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw DataError("data chunk before fmt chunk" + where);
      Waveform wave;
      wave.sample_rate = static_cast<int>(rate);
      wave.samples.resize(size / 2);
      for (double& s : wave.samples) {
        s = static_cast<double>(ReadLE<int16_t>(in)) / 32768.0;
      }
      return wave;
    } else {
      in.ignore(size + (size & 1));
      if (!in) throw DataError("no data chunk" + where);
    }
  }
}

void WriteWav(const Waveform& wave, const std::filesystem::path& path) {
  if (wave.sample_rate <= 0) throw DataError("sample rate must be positive");
  for (double s : wave.samples) {
    if (!std::isfinite(s)) {
      throw DataError("cannot write non-finite sample to " + path.string());
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path.string());

  const auto data_bytes = static_cast<uint32_t>(wave.samples.size() * 2);
  out.write("RIFF", 4);
  WriteLE<uint32_t>(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  WriteLE<uint32_t>(out, 16);
  WriteLE<uint16_t>(out, kFormatPcm);
  WriteLE<uint16_t>(out, 1);
  WriteLE<uint32_t>(out, static_cast<uint32_t>(wave.sample_rate));
  WriteLE<uint32_t>(out, static_cast<uint32_t>(wave.sample_rate) * 2);
  WriteLE<uint16_t>(out, 2);
  WriteLE<uint16_t>(out, 16);
  out.write("data", 4);
  WriteLE<uint32_t>(out, data_bytes);
  for (double s : wave.samples) {
    double code = std::nearbyint(s * 32768.0);
    if (code > 32767.0) code = 32767.0;
    if (code < -32768.0) code = -32768.0;
    WriteLE<int16_t>(out, static_cast<int16_t>(code));
  }
  if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace ncderev
