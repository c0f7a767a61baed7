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

#include "mospred/features.h"

#include <atomic>
#include <stdexcept>
#include <thread>
#include <vector>

namespace mospred {

void FeatureBank::Insert(const std::string& utterance_id, LogMelSpectrogram s) {
  items_[utterance_id] = std::move(s);
}

const LogMelSpectrogram& FeatureBank::at(const std::string& utterance_id) const {
  auto it = items_.find(utterance_id);
  if (it == items_.end()) {
    throw std::out_of_range("no features for utterance '" + utterance_id + "'");
  }
  return it->second;
}

FeatureBank BuildFeatureBank(const Manifest& manifest, const FrontendConfig& cfg,
                             const std::optional<std::filesystem::path>& cache_dir,
                             int workers) {
  cfg.Validate();
  if (cache_dir) std::filesystem::create_directories(*cache_dir);
  std::vector<LogMelSpectrogram> out(manifest.size());
  std::vector<std::string> errors(manifest.size());
  std::atomic<size_t> next{0};
  auto work = [&] {
    for (size_t i = next++; i < manifest.size(); i = next++) {
      const RatingRecord& r = manifest[i];
      try {
        if (cache_dir) {
          const auto cached = *cache_dir / (r.utterance_id + ".mspc");
          if (std::filesystem::exists(cached)) {
            LogMelSpectrogram s = ReadSpectrogramCache(cached);
            if (s.num_frames == cfg.t_max && s.num_mels == cfg.n_mels) {
              out[i] = std::move(s);
              continue;
            }
          }
          out[i] = ExtractFeatures(manifest.base_dir() / r.audio_path, cfg);
          WriteSpectrogramCache(out[i], cached);
        } else {
          out[i] = ExtractFeatures(manifest.base_dir() / r.audio_path, cfg);
        }
      } catch (const std::exception& e) {
        errors[i] = r.utterance_id + ": " + e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (!e.empty()) throw std::runtime_error("feature extraction failed for " + e);
  }
  FeatureBank bank;
  for (size_t i = 0; i < manifest.size(); ++i) {
    bank.Insert(manifest[i].utterance_id, std::move(out[i]));
  }
  return bank;
}

}  // namespace mospred
