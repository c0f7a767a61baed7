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

#ifndef MOSPRED_CHECKPOINT_H_
#define MOSPRED_CHECKPOINT_H_

#include <filesystem>
#include <stdexcept>

#include "mospred/model.h"

namespace mospred {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Binary container: "MOSPCKPT", u32 format version, the model config as i32
// fields, the locale vocabulary, then every tensor as (name, rows, cols,
// little-endian float32 values). Loading validates names and shapes against
// the layout implied by the stored config.
void SaveCheckpoint(const ModelParameters& params,
                    const std::filesystem::path& path);
ModelParameters LoadCheckpoint(const std::filesystem::path& path);

}  // namespace mospred

#endif  // MOSPRED_CHECKPOINT_H_
