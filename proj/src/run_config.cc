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

#include "mospred/run_config.h"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "mospred/csv.h"

namespace mospred {
namespace {

std::string Trim(const std::string& s) {
  const size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

RunConfig RunConfig::Parse(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = Trim(line);
    if (t.empty() || t[0] == '#') continue;
    // " #" starts a trailing comment; a bare '#' inside a value is kept.
    for (size_t i = 1; i < t.size(); ++i) {
      if (t[i] == '#' && std::isspace(static_cast<unsigned char>(t[i - 1]))) {
        t = Trim(t.substr(0, i));
        break;
      }
    }
    const size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = Trim(t.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    if (cfg.Has(key)) {
      throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" + key +
                        "'");
    }
    cfg.values_[key] = Trim(t.substr(eq + 1));
  }
  return cfg;
}

RunConfig RunConfig::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return Parse(buf.str());
}

void RunConfig::Set(const std::string& key, const std::string& value) {
  if (key.empty() || key.find('=') != std::string::npos) {
    throw ConfigError("invalid config key '" + key + "'");
  }
  values_[key] = value;
}

std::string RunConfig::GetString(const std::string& key, const std::string& fallback) {
  auto [it, inserted] = values_.emplace(key, fallback);
  (void)inserted;
  return it->second;
}

double RunConfig::GetDouble(const std::string& key, double fallback) {
  if (!Has(key)) {
    values_[key] = FormatDouble(fallback);
    return fallback;
  }
  try {
    return ParseDouble(values_.at(key));
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + values_.at(key) +
                      "'");
  }
}

int64_t RunConfig::GetInt(const std::string& key, int64_t fallback) {
  if (!Has(key)) {
    values_[key] = std::to_string(fallback);
    return fallback;
  }
  const std::string& s = values_.at(key);
  int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" + s + "'");
  }
  return v;
}

uint64_t RunConfig::GetUint(const std::string& key, uint64_t fallback) {
  if (!Has(key)) {
    values_[key] = std::to_string(fallback);
    return fallback;
  }
  const std::string& s = values_.at(key);
  uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ConfigError("config key '" + key + "': expected a non-negative integer, got '" + s +
                      "'");
  }
  return v;
}

std::vector<std::string> RunConfig::GetList(const std::string& key,
                                            const std::string& fallback) {
  const std::string s = GetString(key, fallback);
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = Trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> RunConfig::GetDoubleList(const std::string& key,
                                             const std::string& fallback) {
  std::vector<double> out;
  for (const auto& item : GetList(key, fallback)) {
    try {
      out.push_back(ParseDouble(item));
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': bad number '" + item + "'");
    }
  }
  return out;
}

std::map<std::string, std::string> RunConfig::WithPrefix(const std::string& prefix) const {
  std::map<std::string, std::string> out;
  for (auto it = values_.lower_bound(prefix);
       it != values_.end() && it->first.compare(0, prefix.size(), prefix) == 0; ++it) {
    out[it->first.substr(prefix.size())] = it->second;
  }
  return out;
}

std::string RunConfig::Serialize() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

void RunConfig::Save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << Serialize();
}

}  // namespace mospred
