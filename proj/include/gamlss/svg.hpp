#pragma once

#include <string>
#include <vector>

namespace gamlss {

/// One plotted series: a connected line or discrete point markers
/// (diamonds built from closed polylines).
struct SvgSeries {
  enum class Style { Line, Points };
  Style style = Style::Line;
  std::string color = "#1f4e79";
  double width = 1.5;
  std::vector<double> x;
  std::vector<double> y;
};

/// A single chart on a fixed 800x600 canvas, rendered with polyline and
/// text primitives only; output is byte-deterministic for identical input.
struct SvgPlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<SvgSeries> series;
};

std::string render_svg(const SvgPlot& plot);

} // namespace gamlss
