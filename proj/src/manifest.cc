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

#include "mospred/manifest.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mospred/rng.h"

namespace mospred {

namespace {

using nlohmann::json;

constexpr int64_t kMicrosPerSecond = 1000000;

// Days since 1970-01-01 for a proleptic Gregorian date.
int64_t DaysFromCivil(int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

void CivilFromDays(int64_t z, int* year, unsigned* month, unsigned* day) {
  z += 719468;
  const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const int64_t y = static_cast<int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  *day = doy - (153 * mp + 2) / 5 + 1;
  *month = mp < 10 ? mp + 3 : mp - 9;
  *year = static_cast<int>(y + (*month <= 2));
}

int ParseDigits(const std::string& s, size_t pos, size_t n) {
  if (pos + n > s.size()) throw std::invalid_argument("truncated timestamp");
  int v = 0;
  for (size_t i = pos; i < pos + n; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) {
      throw std::invalid_argument("bad digit in timestamp '" + s + "'");
    }
    v = v * 10 + (s[i] - '0');
  }
  return v;
}

void Expect(const std::string& s, size_t pos, char c) {
  if (pos >= s.size() || s[pos] != c) {
    throw std::invalid_argument("malformed timestamp '" + s + "'");
  }
}

RatingRecord ParseRecord(const json& j, int line,
                         std::vector<std::string>* warnings) {
  static const std::set<std::string> kKnown = {
      "utterance_id", "audio_path", "locale",   "ratings",
      "system_id",    "project_id", "timestamp"};
  if (!j.is_object()) throw ManifestError("record is not a JSON object", line);
  for (const auto& [key, value] : j.items()) {
    if (!kKnown.count(key) && warnings != nullptr) {
      warnings->push_back("line " + std::to_string(line) +
                          ": ignoring unknown field '" + key + "'");
    }
  }
  auto get_string = [&](const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) {
      throw ManifestError(std::string("missing or non-string field '") + key +
                              "'",
                          line);
    }
    return it->get<std::string>();
  };
  RatingRecord r;
  r.utterance_id = get_string("utterance_id");
  r.audio_path = get_string("audio_path");
  r.locale = NormalizeLocale(get_string("locale"));
  r.system_id = get_string("system_id");
  r.project_id = get_string("project_id");
  try {
    r.timestamp = ParseRfc3339(get_string("timestamp"));
  } catch (const std::invalid_argument& e) {
    throw ManifestError(e.what(), line);
  }
  auto it = j.find("ratings");
  if (it == j.end() || !it->is_array()) {
    throw ManifestError("missing or non-array field 'ratings'", line);
  }
  for (const auto& v : *it) {
    if (!v.is_number()) throw ManifestError("non-numeric rating", line);
    r.ratings.push_back(v.get<double>());
  }
  return r;
}

void ValidateRecord(const RatingRecord& r, int line) {
  if (r.utterance_id.empty()) throw ManifestError("empty utterance_id", line);
  if (r.locale.empty()) throw ManifestError("empty locale", line);
  if (r.ratings.empty()) throw ManifestError("empty ratings list", line);
  for (double v : r.ratings) {
    if (!OnRatingGrid(v)) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%g", v);
      throw ManifestError(std::string("rating ") + buf +
                              " is off the 0.5-step grid [1, 5]",
                          line);
    }
  }
}

}  // namespace

Timestamp MakeUtc(int year, int month, int day, int hour, int minute,
                  int second) {
  const int64_t days = DaysFromCivil(year, month, day);
  const int64_t secs = days * 86400 + hour * 3600 + minute * 60 + second;
  return Timestamp{secs * kMicrosPerSecond};
}

Timestamp ParseRfc3339(const std::string& s) {
  // YYYY-MM-DDTHH:MM:SS[.frac](Z|+hh:mm|-hh:mm)
  const int year = ParseDigits(s, 0, 4);
  Expect(s, 4, '-');
  const int month = ParseDigits(s, 5, 2);
  Expect(s, 7, '-');
  const int day = ParseDigits(s, 8, 2);
  if (s.size() <= 10 || (s[10] != 'T' && s[10] != 't' && s[10] != ' ')) {
    throw std::invalid_argument("malformed timestamp '" + s + "'");
  }
  const int hour = ParseDigits(s, 11, 2);
  Expect(s, 13, ':');
  const int minute = ParseDigits(s, 14, 2);
  Expect(s, 16, ':');
  const int second = ParseDigits(s, 17, 2);
  if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 ||
      minute > 59 || second > 60) {
    throw std::invalid_argument("out-of-range timestamp '" + s + "'");
  }
  size_t pos = 19;
  int64_t frac_micros = 0;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    int64_t scale = 100000;
    const size_t start = pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
      frac_micros += (s[pos] - '0') * scale;
      scale /= 10;
      ++pos;
    }
    if (pos == start) throw std::invalid_argument("empty fraction in '" + s + "'");
  }
  int64_t offset_secs = 0;
  if (pos < s.size() && (s[pos] == 'Z' || s[pos] == 'z')) {
    ++pos;
  } else if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
    const int sign = s[pos] == '+' ? 1 : -1;
    const int oh = ParseDigits(s, pos + 1, 2);
    Expect(s, pos + 3, ':');
    const int om = ParseDigits(s, pos + 4, 2);
    offset_secs = sign * (oh * 3600 + om * 60);
    pos += 6;
  } else {
    throw std::invalid_argument("timestamp '" + s + "' lacks a UTC offset");
  }
  if (pos != s.size()) {
    throw std::invalid_argument("trailing characters in timestamp '" + s + "'");
  }
  Timestamp t = MakeUtc(year, month, day, hour, minute, second);
  t.micros += frac_micros - offset_secs * kMicrosPerSecond;
  return t;
}

std::string FormatRfc3339(Timestamp t) {
  int64_t secs = t.micros / kMicrosPerSecond;
  int64_t micros = t.micros % kMicrosPerSecond;
  if (micros < 0) {
    micros += kMicrosPerSecond;
    --secs;
  }
  int64_t days = secs / 86400;
  int64_t rem = secs % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  int year;
  unsigned month, day;
  CivilFromDays(days, &year, &month, &day);
  char buf[48];
  if (micros == 0) {
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ", year,
                  month, day, static_cast<int>(rem / 3600),
                  static_cast<int>(rem / 60 % 60), static_cast<int>(rem % 60));
  } else {
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02d.%06dZ",
                  year, month, day, static_cast<int>(rem / 3600),
                  static_cast<int>(rem / 60 % 60), static_cast<int>(rem % 60),
                  static_cast<int>(micros));
  }
  return buf;
}

std::string NormalizeLocale(const std::string& tag) {
  std::string out;
  std::string part;
  int index = 0;
  auto flush = [&] {
    if (index > 0) out += '-';
    std::string p = part;
    if (index == 0) {
      for (char& c : p) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (p.size() == 2 ||
               (p.size() == 3 && std::all_of(p.begin(), p.end(), ::isdigit))) {
      for (char& c : p) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    } else if (p.size() == 4) {
      for (char& c : p) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      p[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(p[0])));
    } else {
      for (char& c : p) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    out += p;
    part.clear();
    ++index;
  };
  for (char c : tag) {
    if (c == '-' || c == '_') {
      flush();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      part += c;
    }
  }
  if (!part.empty() || index > 0) flush();
  return out;
}

bool OnRatingGrid(double score) {
  if (!(score >= 1.0 && score <= 5.0)) return false;
  const double doubled = score * 2.0;
  return std::fabs(doubled - std::round(doubled)) < 1e-9;
}

Manifest::Manifest(std::vector<RatingRecord> records)
    : records_(std::move(records)) {
  std::set<std::string> seen;
  for (size_t i = 0; i < records_.size(); ++i) {
    ValidateRecord(records_[i], 0);
    if (!seen.insert(records_[i].utterance_id).second) {
      throw ManifestError("duplicate utterance_id '" +
                          records_[i].utterance_id + "'");
    }
    locale_index_[records_[i].locale].push_back(i);
  }
}

LocaleSet Manifest::Locales() const {
  LocaleSet out;
  for (const auto& [locale, _] : locale_index_) out.insert(locale);
  return out;
}

Manifest Manifest::Filter(
    const std::function<bool(const RatingRecord&)>& keep) const {
  std::vector<RatingRecord> kept;
  for (const auto& r : records_) {
    if (keep(r)) kept.push_back(r);
  }
  Manifest out(std::move(kept));
  out.base_dir_ = base_dir_;
  return out;
}

Manifest Manifest::RestrictToLocales(const LocaleSet& locales) const {
  return Filter([&](const RatingRecord& r) { return locales.count(r.locale) > 0; });
}

void SplitSpec::Validate() const {
  if (!(dev_fraction > 0.0 && dev_fraction < 1.0)) {
    throw std::invalid_argument("dev_fraction must lie strictly in (0, 1)");
  }
  if (zero_shot_threshold < 0) {
    throw std::invalid_argument("zero_shot_threshold must be >= 0");
  }
}

Manifest LoadManifest(const std::filesystem::path& path,
                      std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw ManifestError("cannot open manifest " + path.string());
  std::vector<RatingRecord> records;
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(),
                    [](char c) { return std::isspace(static_cast<unsigned char>(c)); })) {
      continue;
    }
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ManifestError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    RatingRecord r = ParseRecord(j, line_no, warnings);
    ValidateRecord(r, line_no);
    if (!seen.insert(r.utterance_id).second) {
      throw ManifestError("duplicate utterance_id '" + r.utterance_id + "'",
                          line_no);
    }
    records.push_back(std::move(r));
  }
  Manifest m(std::move(records));
  m.set_base_dir(path.parent_path());
  return m;
}

std::string RecordToJson(const RatingRecord& r) {
  // Field order is fixed so regenerated manifests are byte-identical.
  json ratings = json::array();
  for (double v : r.ratings) ratings.push_back(v);
  std::ostringstream os;
  os << "{\"utterance_id\":" << json(r.utterance_id).dump()
     << ",\"audio_path\":" << json(r.audio_path).dump()
     << ",\"locale\":" << json(r.locale).dump()
     << ",\"ratings\":" << ratings.dump()
     << ",\"system_id\":" << json(r.system_id).dump()
     << ",\"project_id\":" << json(r.project_id).dump()
     << ",\"timestamp\":" << json(FormatRfc3339(r.timestamp)).dump() << "}";
  return os.str();
}

void WriteManifest(const Manifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ManifestError("cannot write manifest " + path.string());
  for (const auto& r : manifest.records()) out << RecordToJson(r) << '\n';
}

TimeSplit SplitByTime(const Manifest& manifest, Timestamp cutoff) {
  return {manifest.Filter([&](const RatingRecord& r) { return r.timestamp < cutoff; }),
          manifest.Filter([&](const RatingRecord& r) { return !(r.timestamp < cutoff); })};
}

LocalePartition HoldoutZeroShot(const Manifest& manifest, int64_t threshold) {
  LocalePartition out;
  for (const auto& [locale, indices] : manifest.locale_index()) {
    if (static_cast<int64_t>(indices.size()) < threshold) {
      out.zero_shot.insert(locale);
    } else {
      out.fine_tuned.insert(locale);
    }
  }
  return out;
}

DevSplit SampleDev(const Manifest& train, double fraction, uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("dev fraction must lie strictly in (0, 1)");
  }
  const size_t n = train.size();
  const auto dev_size = static_cast<size_t>(
      std::floor(fraction * static_cast<double>(n) + 0.5));
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  // Partial Fisher-Yates: the first dev_size slots are the sample.
  for (size_t i = 0; i < dev_size; ++i) {
    const size_t j = i + rng.UniformInt(n - i);
    std::swap(order[i], order[j]);
  }
  std::vector<bool> in_dev(n, false);
  for (size_t i = 0; i < dev_size; ++i) in_dev[order[i]] = true;
  std::vector<RatingRecord> keep, dev;
  for (size_t i = 0; i < n; ++i) {
    (in_dev[i] ? dev : keep).push_back(train[i]);
  }
  DevSplit out{Manifest(std::move(keep)), Manifest(std::move(dev))};
  out.train.set_base_dir(train.base_dir());
  out.dev.set_base_dir(train.base_dir());
  return out;
}

double AggregateTarget(const RatingRecord& record) {
  double sum = 0.0;
  for (double v : record.ratings) sum += v;
  const double mean = sum / static_cast<double>(record.ratings.size());
  return (mean - 1.0) / 4.0;
}

std::map<std::string, LocaleStat> LocaleStats(const Manifest& manifest) {
  if (manifest.empty()) {
    throw std::invalid_argument("locale statistics of an empty manifest");
  }
  std::map<std::string, LocaleStat> out;
  const double total = static_cast<double>(manifest.size());
  for (const auto& [locale, indices] : manifest.locale_index()) {
    out[locale] = {indices.size(), static_cast<double>(indices.size()) / total};
  }
  return out;
}

SplitResult MakeSplit(const Manifest& manifest, const SplitSpec& spec) {
  spec.Validate();
  SplitResult out;
  const LocalePartition partition =
      HoldoutZeroShot(manifest, spec.zero_shot_threshold);
  out.fine_tuned_locales = partition.fine_tuned;
  out.zero_shot_locales = partition.zero_shot;
  // Zero-shot locales contribute only test data, whatever their timestamps.
  const TimeSplit by_time = SplitByTime(manifest, spec.time_cutoff);
  const Manifest trainable = by_time.before.RestrictToLocales(partition.fine_tuned);
  DevSplit dev = SampleDev(trainable, spec.dev_fraction, spec.seed);
  out.train = std::move(dev.train);
  out.dev = std::move(dev.dev);
  out.test = manifest.Filter([&](const RatingRecord& r) {
    return partition.zero_shot.count(r.locale) > 0 ||
           !(r.timestamp < spec.time_cutoff);
  });
  return out;
}

}  // namespace mospred
