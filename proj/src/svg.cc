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

#include "mospred/svg.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "mospred/stats.h"

namespace mospred {
namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0, kRight = 20.0, kTop = 40.0, kBottom = 70.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string Escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = 0.0, hi = 1.0;
};

Range Extent(const std::vector<double>& v) {
  Range r{INFINITY, -INFINITY};
  for (double x : v) {
    if (!std::isfinite(x)) continue;
    r.lo = std::min(r.lo, x);
    r.hi = std::max(r.hi, x);
  }
  if (!std::isfinite(r.lo)) return {0.0, 1.0};
  if (r.hi - r.lo < 1e-12) {
    r.lo -= 0.5;
    r.hi += 0.5;
  }
  const double pad = 0.05 * (r.hi - r.lo);
  return {r.lo - pad, r.hi + pad};
}

class Canvas {
 public:
  Canvas(const std::string& title, Range x, Range y) : x_(x), y_(y) {
    out_ = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + Num(kWidth) + "\" height=\"" +
           Num(kHeight) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    out_ += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    Text(kWidth / 2, 22, title, "middle", 14);
  }

  double X(double v) const {
    return kLeft + (v - x_.lo) / (x_.hi - x_.lo) * (kWidth - kLeft - kRight);
  }
  double Y(double v) const {
    return kHeight - kBottom - (v - y_.lo) / (y_.hi - y_.lo) * (kHeight - kTop - kBottom);
  }

  void Axes(const std::string& x_label, const std::string& y_label, bool x_ticks = true) {
    Line(kLeft, kHeight - kBottom, kWidth - kRight, kHeight - kBottom, "black");
    Line(kLeft, kTop, kLeft, kHeight - kBottom, "black");
    for (int i = 0; i <= 4; ++i) {
      const double yv = y_.lo + (y_.hi - y_.lo) * i / 4.0;
      Line(kLeft - 4, Y(yv), kLeft, Y(yv), "black");
      Text(kLeft - 6, Y(yv) + 4, Num(yv), "end");
      if (x_ticks) {
        const double xv = x_.lo + (x_.hi - x_.lo) * i / 4.0;
        Line(X(xv), kHeight - kBottom, X(xv), kHeight - kBottom + 4, "black");
        Text(X(xv), kHeight - kBottom + 16, Num(xv), "middle");
      }
    }
    Text((kLeft + kWidth - kRight) / 2, kHeight - 18, x_label, "middle");
    out_ += "<text x=\"16\" y=\"" + Num((kTop + kHeight - kBottom) / 2) +
            "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
            Num((kTop + kHeight - kBottom) / 2) + ")\">" + Escape(y_label) + "</text>\n";
  }

  void Line(double x1, double y1, double x2, double y2, const std::string& color,
            double width = 1.0) {
    out_ += "<line x1=\"" + Num(x1) + "\" y1=\"" + Num(y1) + "\" x2=\"" + Num(x2) + "\" y2=\"" +
            Num(y2) + "\" stroke=\"" + color + "\" stroke-width=\"" + Num(width) + "\"/>\n";
  }
  void Circle(double cx, double cy, double r, const std::string& color) {
    out_ += "<circle cx=\"" + Num(cx) + "\" cy=\"" + Num(cy) + "\" r=\"" + Num(r) +
            "\" fill=\"" + color + "\" fill-opacity=\"0.7\"/>\n";
  }
  void Rect(double x, double y, double w, double h, const std::string& fill,
            const std::string& stroke = "none") {
    out_ += "<rect x=\"" + Num(x) + "\" y=\"" + Num(y) + "\" width=\"" + Num(w) +
            "\" height=\"" + Num(h) + "\" fill=\"" + fill + "\" stroke=\"" + stroke + "\"/>\n";
  }
  void Text(double x, double y, const std::string& s, const std::string& anchor,
            int size = 11, const std::string& extra = "") {
    out_ += "<text x=\"" + Num(x) + "\" y=\"" + Num(y) + "\" text-anchor=\"" + anchor +
            "\" font-size=\"" + std::to_string(size) + "\"" + extra + ">" + Escape(s) +
            "</text>\n";
  }
  void Raw(const std::string& s) { out_ += s; }

  std::string Finish() { return out_ + "</svg>\n"; }

 private:
  Range x_, y_;
  std::string out_;
};

// Label positions along a categorical x axis.
double Slot(size_t i, size_t n) {
  const double w = (kWidth - kLeft - kRight) / static_cast<double>(std::max<size_t>(n, 1));
  return kLeft + w * (static_cast<double>(i) + 0.5);
}

void CategoryLabels(Canvas& c, const std::vector<std::string>& labels) {
  for (size_t i = 0; i < labels.size(); ++i) {
    const double x = Slot(i, labels.size());
    const double y = kHeight - kBottom + 12;
    c.Text(x, y, labels[i], "end", 10,
           " transform=\"rotate(-40 " + Num(x) + " " + Num(y) + ")\"");
  }
}

}  // namespace

std::string ScatterSvg(const std::string& title, const std::string& x_label,
                       const std::string& y_label, const std::vector<double>& x,
                       const std::vector<double>& y,
                       const std::vector<std::string>& point_labels) {
  if (x.size() != y.size()) throw std::invalid_argument("scatter: length mismatch");
  Canvas c(title, Extent(x), Extent(y));
  c.Axes(x_label, y_label);
  for (size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) continue;
    c.Circle(c.X(x[i]), c.Y(y[i]), 3.0, kPalette[0]);
    if (i < point_labels.size()) c.Text(c.X(x[i]) + 5, c.Y(y[i]) - 5, point_labels[i], "start", 9);
  }
  return c.Finish();
}

std::string LineChartSvg(const std::string& title, const std::string& x_label,
                         const std::string& y_label, const std::vector<Series>& series,
                         bool log_x) {
  std::vector<double> xs, ys;
  auto tx = [&](double v) { return log_x ? std::log10(v) : v; };
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("line chart: length mismatch");
    for (double v : s.x) xs.push_back(tx(v));
    ys.insert(ys.end(), s.y.begin(), s.y.end());
  }
  Canvas c(title, Extent(xs), Extent(ys));
  c.Axes(log_x ? x_label + " (log10)" : x_label, y_label);
  for (size_t k = 0; k < series.size(); ++k) {
    const std::string color = kPalette[k % std::size(kPalette)];
    const Series& s = series[k];
    std::string points;
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      points += Num(c.X(tx(s.x[i]))) + "," + Num(c.Y(s.y[i])) + " ";
      c.Circle(c.X(tx(s.x[i])), c.Y(s.y[i]), 3.0, color);
    }
    c.Raw("<polyline fill=\"none\" stroke=\"" + color + "\" points=\"" + points + "\"/>\n");
    c.Text(kWidth - kRight - 4, kTop + 14.0 * (k + 1), s.name, "end", 10,
           " fill=\"" + color + "\"");
  }
  return c.Finish();
}

std::string HeatmapSvg(const std::string& title, const std::vector<std::string>& row_labels,
                       const std::vector<std::string>& col_labels,
                       const std::vector<std::vector<std::optional<double>>>& values) {
  if (values.size() != row_labels.size()) throw std::invalid_argument("heatmap: row mismatch");
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& row : values) {
    if (row.size() != col_labels.size()) throw std::invalid_argument("heatmap: column mismatch");
    for (const auto& v : row) {
      if (v && std::isfinite(*v)) {
        lo = std::min(lo, *v);
        hi = std::max(hi, *v);
      }
    }
  }
  const double bound = std::isfinite(lo) ? std::max({std::abs(lo), std::abs(hi), 1e-9}) : 1.0;
  Canvas c(title, {0, 1}, {0, 1});
  const double w = (kWidth - kLeft - kRight) / std::max<size_t>(col_labels.size(), 1);
  const double h = (kHeight - kTop - kBottom) / std::max<size_t>(row_labels.size(), 1);
  c.Raw(
      "<defs><pattern id=\"hatch\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\">"
      "<rect width=\"6\" height=\"6\" fill=\"#ddd\"/><line x1=\"0\" y1=\"6\" x2=\"6\" y2=\"0\" "
      "stroke=\"#999\"/></pattern></defs>\n");
  for (size_t i = 0; i < row_labels.size(); ++i) {
    c.Text(kLeft - 4, kTop + h * (i + 0.5) + 4, row_labels[i], "end", 10);
    for (size_t j = 0; j < col_labels.size(); ++j) {
      const auto& v = values[i][j];
      std::string fill = "url(#hatch)";
      if (v && std::isfinite(*v)) {
        // Diverging blue-white-red around zero.
        const double t = std::clamp(*v / bound, -1.0, 1.0);
        const int r = t < 0 ? static_cast<int>(255 * (1 + t)) : 255;
        const int b = t > 0 ? static_cast<int>(255 * (1 - t)) : 255;
        const int g = static_cast<int>(255 * (1 - std::abs(t)));
        char buf[16];
        std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
        fill = buf;
      }
      c.Rect(kLeft + w * j, kTop + h * i, w, h, fill, "white");
      if (v && std::isfinite(*v)) {
        c.Text(kLeft + w * (j + 0.5), kTop + h * (i + 0.5) + 4, Num(*v), "middle", 9);
      }
    }
  }
  CategoryLabels(c, col_labels);
  return c.Finish();
}

std::string IntervalChartSvg(const std::string& title, const std::string& y_label,
                             const std::vector<std::string>& labels,
                             const std::vector<double>& values, const std::vector<double>& low,
                             const std::vector<double>& high) {
  if (values.size() != labels.size() || low.size() != labels.size() ||
      high.size() != labels.size()) {
    throw std::invalid_argument("interval chart: length mismatch");
  }
  std::vector<double> all = values;
  all.insert(all.end(), low.begin(), low.end());
  all.insert(all.end(), high.begin(), high.end());
  Canvas c(title, {0, 1}, Extent(all));
  c.Axes("", y_label, false);
  for (size_t i = 0; i < labels.size(); ++i) {
    const double x = Slot(i, labels.size());
    if (std::isfinite(low[i]) && std::isfinite(high[i])) {
      c.Line(x, c.Y(low[i]), x, c.Y(high[i]), "#555", 1.5);
      c.Line(x - 4, c.Y(low[i]), x + 4, c.Y(low[i]), "#555");
      c.Line(x - 4, c.Y(high[i]), x + 4, c.Y(high[i]), "#555");
    }
    if (std::isfinite(values[i])) c.Circle(x, c.Y(values[i]), 4.0, kPalette[0]);
  }
  CategoryLabels(c, labels);
  return c.Finish();
}

std::string BoxPlotSvg(const std::string& title, const std::string& y_label,
                       const std::vector<std::string>& labels,
                       const std::vector<std::vector<double>>& groups) {
  if (groups.size() != labels.size()) throw std::invalid_argument("box plot: length mismatch");
  std::vector<double> all;
  for (const auto& g : groups) all.insert(all.end(), g.begin(), g.end());
  Canvas c(title, {0, 1}, Extent(all));
  c.Axes("", y_label, false);
  const double half = 0.3 * (kWidth - kLeft - kRight) / std::max<size_t>(labels.size(), 1);
  for (size_t i = 0; i < groups.size(); ++i) {
    if (groups[i].empty()) continue;
    std::vector<double> g = groups[i];
    std::sort(g.begin(), g.end());
    const double q1 = Quantile(g, 0.25), q2 = Quantile(g, 0.5), q3 = Quantile(g, 0.75);
    const double iqr = q3 - q1;
    double wlo = q1, whi = q3;
    for (double v : g) {
      if (v >= q1 - 1.5 * iqr) wlo = std::min(wlo, v);
      if (v <= q3 + 1.5 * iqr) whi = std::max(whi, v);
    }
    const double x = Slot(i, labels.size());
    c.Line(x, c.Y(wlo), x, c.Y(q1), "#333");
    c.Line(x, c.Y(q3), x, c.Y(whi), "#333");
    c.Rect(x - half, c.Y(q3), 2 * half, std::max(c.Y(q1) - c.Y(q3), 0.5),
           kPalette[i % std::size(kPalette)], "#333");
    c.Line(x - half, c.Y(q2), x + half, c.Y(q2), "black", 2.0);
    for (double v : g) {
      if (v < wlo || v > whi) c.Circle(x, c.Y(v), 2.0, "#333");
    }
  }
  CategoryLabels(c, labels);
  return c.Finish();
}

void WriteSvg(const std::string& svg, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << svg;
}

}  // namespace mospred
