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

#ifndef MOSPRED_RUN_CONFIG_H_
#define MOSPRED_RUN_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace mospred {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat key = value configuration. Lines starting with '#' and blank lines are
// ignored; keys are unique. Typed getters store the default on first use, so
// after resolution the table holds every value a run actually consumed.
class RunConfig {
 public:
  static RunConfig Parse(const std::string& text);
  static RunConfig Load(const std::filesystem::path& path);

  bool Has(const std::string& key) const { return values_.count(key) > 0; }
  void Set(const std::string& key, const std::string& value);
  void Erase(const std::string& key) { values_.erase(key); }

  std::string GetString(const std::string& key, const std::string& fallback);
  double GetDouble(const std::string& key, double fallback);
  int64_t GetInt(const std::string& key, int64_t fallback);
  uint64_t GetUint(const std::string& key, uint64_t fallback);
  // Comma-separated; empty items are dropped.
  std::vector<std::string> GetList(const std::string& key, const std::string& fallback);
  std::vector<double> GetDoubleList(const std::string& key, const std::string& fallback);

  // Keys under `prefix` with the prefix stripped.
  std::map<std::string, std::string> WithPrefix(const std::string& prefix) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  std::string Serialize() const;  // sorted by key
  void Save(const std::filesystem::path& path) const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace mospred

#endif  // MOSPRED_RUN_CONFIG_H_
