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

#ifndef MOSPRED_WAV_H_
#define MOSPRED_WAV_H_

#include <filesystem>
#include <stdexcept>

#include "mospred/dsp.h"

namespace mospred {

class WavError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// 16-bit PCM mono only; anything else is a WavError.
Waveform ReadWav(const std::filesystem::path& path);
// Samples are clipped to [-1, 1] and quantized to 16 bits.
void WriteWav(const Waveform& w, const std::filesystem::path& path);

}  // namespace mospred

#endif  // MOSPRED_WAV_H_
