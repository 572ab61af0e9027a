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


#ifndef NCDEREV_SRC_BINARY_IO_H_
#define NCDEREV_SRC_BINARY_IO_H_

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string_view>

#include "ncderev/error.h"

namespace ncderev::internal {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

template <typename T>
void WriteLE(std::ostream& out, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.write(bytes, sizeof(T));
}

template <typename T>
T ReadLE(std::istream& in) {
  char bytes[sizeof(T)];
  if (!in.read(bytes, sizeof(T))) throw DataError("unexpected end of file");
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

inline void WriteMagic(std::ostream& out, std::string_view magic) {
  out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

inline void ExpectMagic(std::istream& in, std::string_view magic) {
  char bytes[8] = {};
  if (!in.read(bytes, static_cast<std::streamsize>(magic.size())) ||
      std::string_view(bytes, magic.size()) != magic) {
    throw DataError("bad magic: expected \"" + std::string(magic) + "\"");
  }
}

}  // namespace ncderev::internal

#endif  // NCDEREV_SRC_BINARY_IO_H_
