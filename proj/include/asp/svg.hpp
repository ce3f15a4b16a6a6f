#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace asp {

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (x, y), drawn in order
};

struct LineChartOptions {
  std::string title;
  std::string x_label = "step";
  std::string y_label = "success rate";
  double y_min = 0.0;
  double y_max = 1.0;
  int width = 640;
  int height = 400;
};

// Polyline per series with a marker on every point, axes, ticks and legend.
std::string LineChartSvg(const std::vector<Series>& series,
                         const LineChartOptions& options);

// Cells shaded from white (0) to dark blue (1); missing cells are hatched grey
// and labelled "n/a".
std::string HeatmapSvg(const std::string& title,
                       const std::vector<std::string>& row_labels,
                       const std::vector<std::string>& col_labels,
                       const std::vector<std::vector<std::optional<double>>>& values,
                       const std::string& row_axis, const std::string& col_axis);

// Escapes &, <, >, " for use in SVG text and attributes.
std::string XmlEscape(const std::string& text);

}  // namespace asp
