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

#ifndef NCDEREV_ERROR_H_
#define NCDEREV_ERROR_H_

#include <stdexcept>
#include <string>

namespace ncderev {

// Base class for every error thrown by the library. The CLI maps the three
// subclasses onto exit codes 2, 3 and 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments, malformed configuration, infeasible parameter sets.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Unreadable or inconsistent input data (files, shapes, lengths).
class DataError : public Error {
 public:
  using Error::Error;
};

// Singular systems, divergence, non-finite values.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace ncderev

#endif  // NCDEREV_ERROR_H_
