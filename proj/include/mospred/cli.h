// Copyright 2026 The mospred Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MOSPRED_CLI_H_
#define MOSPRED_CLI_H_

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "mospred/pipeline.h"
#include "mospred/run_config.h"
#include "mospred/synthbench.h"

namespace mospred {

// Environment variable naming the default output root.
inline constexpr char kOutRootEnv[] = "MOSPRED_OUT_ROOT";

// Reads every experiment key from `cfg`, storing defaults for absent keys.
// Throws ConfigError when a value is malformed or out of range.
ExperimentSettings ResolveSettings(RunConfig& cfg, int64_t default_zero_shot_threshold = 8000);
SynthConfig ResolveSynthConfig(RunConfig& cfg);

// `args` excludes the program name. Returns the process exit code: 0 on
// success, 1 for user or configuration errors, 2 for internal errors.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mospred

#endif  // MOSPRED_CLI_H_
