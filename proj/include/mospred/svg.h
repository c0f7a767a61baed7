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

#ifndef MOSPRED_SVG_H_
#define MOSPRED_SVG_H_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mospred {

// Self-contained SVG charts. Output depends only on the inputs, so reruns
// produce identical files.

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

std::string ScatterSvg(const std::string& title, const std::string& x_label,
                       const std::string& y_label, const std::vector<double>& x,
                       const std::vector<double>& y,
                       const std::vector<std::string>& point_labels = {});

std::string LineChartSvg(const std::string& title, const std::string& x_label,
                         const std::string& y_label, const std::vector<Series>& series,
                         bool log_x = false);

// Missing cells are drawn hatched grey.
std::string HeatmapSvg(const std::string& title, const std::vector<std::string>& row_labels,
                       const std::vector<std::string>& col_labels,
                       const std::vector<std::vector<std::optional<double>>>& values);

// One point per label with a vertical interval, e.g. per-locale tau and CI.
std::string IntervalChartSvg(const std::string& title, const std::string& y_label,
                             const std::vector<std::string>& labels,
                             const std::vector<double>& values, const std::vector<double>& low,
                             const std::vector<double>& high);

// Tukey box plots (quartiles, whiskers at 1.5 IQR).
std::string BoxPlotSvg(const std::string& title, const std::string& y_label,
                       const std::vector<std::string>& labels,
                       const std::vector<std::vector<double>>& groups);

void WriteSvg(const std::string& svg, const std::filesystem::path& path);

}  // namespace mospred

#endif  // MOSPRED_SVG_H_
