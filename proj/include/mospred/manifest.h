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

#ifndef MOSPRED_MANIFEST_H_
#define MOSPRED_MANIFEST_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace mospred {

// UTC instant with microsecond resolution.
struct Timestamp {
  int64_t micros = 0;  // since 1970-01-01T00:00:00Z

  auto operator<=>(const Timestamp&) const = default;
};

// Parses RFC-3339 ("2021-06-01T12:00:00Z", optional fraction, Z or +hh:mm).
Timestamp ParseRfc3339(const std::string& text);
std::string FormatRfc3339(Timestamp t);
Timestamp MakeUtc(int year, int month, int day, int hour = 0, int minute = 0,
                  int second = 0);

// Lowercase language, uppercase region ("EN-us" -> "en-US"), title-case
// 4-letter script subtags.
std::string NormalizeLocale(const std::string& tag);

// True when the score is one of the nine values 1.0, 1.5, ..., 5.0.
bool OnRatingGrid(double score);

struct RatingRecord {
  std::string utterance_id;
  std::string audio_path;  // relative to the manifest directory
  std::string locale;
  std::vector<double> ratings;
  std::string system_id;
  std::string project_id;
  Timestamp timestamp;
};

class ManifestError : public std::runtime_error {
 public:
  ManifestError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " +
                                          what
                                    : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

using LocaleSet = std::set<std::string>;

class Manifest {
 public:
  Manifest() = default;
  // Validates every record and the uniqueness of utterance ids.
  explicit Manifest(std::vector<RatingRecord> records);

  const std::vector<RatingRecord>& records() const { return records_; }
  const std::map<std::string, std::vector<size_t>>& locale_index() const {
    return locale_index_;
  }
  size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const RatingRecord& operator[](size_t i) const { return records_[i]; }

  LocaleSet Locales() const;
  // Records satisfying the predicate, order preserved.
  Manifest Filter(const std::function<bool(const RatingRecord&)>& keep) const;
  Manifest RestrictToLocales(const LocaleSet& locales) const;

  // Directory that relative audio paths resolve against.
  const std::filesystem::path& base_dir() const { return base_dir_; }
  void set_base_dir(std::filesystem::path dir) { base_dir_ = std::move(dir); }

 private:
  std::vector<RatingRecord> records_;
  std::map<std::string, std::vector<size_t>> locale_index_;
  std::filesystem::path base_dir_;
};

struct SplitSpec {
  Timestamp time_cutoff = MakeUtc(2021, 12, 1);
  int64_t zero_shot_threshold = 8000;
  double dev_fraction = 0.025;
  uint64_t seed = 0;

  void Validate() const;
};

struct SplitResult {
  Manifest train;
  Manifest dev;
  Manifest test;
  LocaleSet fine_tuned_locales;
  LocaleSet zero_shot_locales;
};

struct LocaleStat {
  size_t count = 0;
  double frequency = 0.0;
};

// Reads a JSONL manifest. Unknown fields are reported through `warnings`
// (when non-null) and otherwise ignored.
Manifest LoadManifest(const std::filesystem::path& path,
                      std::vector<std::string>* warnings = nullptr);
std::string RecordToJson(const RatingRecord& record);
void WriteManifest(const Manifest& manifest, const std::filesystem::path& path);

struct TimeSplit {
  Manifest before;
  Manifest after;
};
// Half-open: records exactly at the cutoff land in `after`.
TimeSplit SplitByTime(const Manifest& manifest, Timestamp cutoff);

struct LocalePartition {
  LocaleSet fine_tuned;
  LocaleSet zero_shot;
};
// A locale is zero-shot iff it has strictly fewer than `threshold` records.
LocalePartition HoldoutZeroShot(const Manifest& manifest, int64_t threshold);

struct DevSplit {
  Manifest train;
  Manifest dev;
};
// Samples round-half-up(fraction * |train|) records without replacement.
DevSplit SampleDev(const Manifest& train, double fraction, uint64_t seed);

// (mean(ratings) - 1) / 4.
double AggregateTarget(const RatingRecord& record);

std::map<std::string, LocaleStat> LocaleStats(const Manifest& manifest);

// Time split on the cutoff, zero-shot holdout counted on the pre-cutoff side,
// then dev sampling from the remaining fine-tuned training records.
SplitResult MakeSplit(const Manifest& manifest, const SplitSpec& spec);

}  // namespace mospred

#endif  // MOSPRED_MANIFEST_H_
