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

#ifndef MOSPRED_FEATURES_H_
#define MOSPRED_FEATURES_H_

#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>

#include "mospred/dsp.h"
#include "mospred/manifest.h"

namespace mospred {

// Spectrograms keyed by utterance id.
class FeatureBank {
 public:
  void Insert(const std::string& utterance_id, LogMelSpectrogram s);
  // Throws std::out_of_range for an unknown utterance.
  const LogMelSpectrogram& at(const std::string& utterance_id) const;
  bool contains(const std::string& utterance_id) const {
    return items_.count(utterance_id) > 0;
  }
  size_t size() const { return items_.size(); }

 private:
  std::unordered_map<std::string, LogMelSpectrogram> items_;
};

// Extracts features for every record, reading audio relative to the
// manifest's base directory. With a cache directory, spectrograms are read
// from (or written to) <cache_dir>/<utterance_id>.mspc.
FeatureBank BuildFeatureBank(const Manifest& manifest, const FrontendConfig& cfg,
                             const std::optional<std::filesystem::path>& cache_dir =
                                 std::nullopt,
                             int workers = 1);

}  // namespace mospred

#endif  // MOSPRED_FEATURES_H_
