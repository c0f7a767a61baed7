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

#ifndef MOSPRED_CSV_H_
#define MOSPRED_CSV_H_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace mospred {

// Shortest text that round-trips the double exactly; "nan" for NaN.
std::string FormatDouble(double v);
double ParseDouble(const std::string& text);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column index by name; throws std::out_of_range when absent.
  size_t Column(const std::string& name) const;
};

// Minimal CSV: comma-separated, fields quoted only when they contain a comma,
// quote or newline.
CsvTable ReadCsv(const std::filesystem::path& path);
void WriteCsv(const CsvTable& table, const std::filesystem::path& path);

}  // namespace mospred

#endif  // MOSPRED_CSV_H_
