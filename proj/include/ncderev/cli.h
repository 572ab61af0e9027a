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

#ifndef NCDEREV_CLI_H_
#define NCDEREV_CLI_H_

#include <json.hpp>

#include <string>
#include <vector>

namespace ncderev {

// Built-in configuration. Every key may be overridden by a JSON file given
// with --config and then by command-line flags.
nlohmann::json DefaultConfig();

// Recursively applies `patch` to `base`. Throws ConfigError on keys that the
// base does not define.
void MergeConfig(nlohmann::json& base, const nlohmann::json& patch,
                 const std::string& where = "");

// Entry point of the ncderev tool. Returns the process exit code: 0 on
// success, 2 for configuration errors, 3 for data errors, 4 for numerical
// failures. Diagnostics go to stderr.
int RunCli(int argc, const char* const* argv);
int RunCli(const std::vector<std::string>& args);

}  // namespace ncderev

#endif  // NCDEREV_CLI_H_
