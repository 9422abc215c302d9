#include "gamlss/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

namespace gamlss {

namespace {

// canvas and plot-area geometry (pixels)
constexpr double kWidth = 800.0;
constexpr double kHeight = 600.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 780.0;
constexpr double kTop = 50.0;
constexpr double kBottom = 550.0;

std::string num(double v, const char* spec = "%.2f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string escape_text(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;
  void widen(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
};

void pad(Range* r) {
  if (r->hi < r->lo) {
    r->lo = 0.0;
    r->hi = 1.0;
  }
  const double span = r->hi - r->lo;
  const double margin = span > 0.0 ? 0.05 * span : 1.0;
  r->lo -= margin;
  r->hi += margin;
}

} // namespace

std::string render_svg(const SvgPlot& plot) {
  Range rx{1e300, -1e300}, ry{1e300, -1e300};
  for (const SvgSeries& s : plot.series) {
    const std::size_t n = std::min(s.x.size(), s.y.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) {
        rx.widen(s.x[i]);
        ry.widen(s.y[i]);
      }
    }
  }
  pad(&rx);
  pad(&ry);

  const auto px = [&rx](double v) {
    return kLeft + (v - rx.lo) / (rx.hi - rx.lo) * (kRight - kLeft);
  };
  const auto py = [&ry](double v) {
    return kBottom - (v - ry.lo) / (ry.hi - ry.lo) * (kBottom - kTop);
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 600\" "
         "width=\"800\" height=\"600\">\n";
  svg += "<text x=\"400\" y=\"28\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"16\">" +
         escape_text(plot.title) + "</text>\n";

  // frame
  svg += "<polyline fill=\"none\" stroke=\"#333333\" stroke-width=\"1\" "
         "points=\"" +
         num(kLeft) + "," + num(kTop) + " " + num(kRight) + "," + num(kTop) +
         " " + num(kRight) + "," + num(kBottom) + " " + num(kLeft) + "," +
         num(kBottom) + " " + num(kLeft) + "," + num(kTop) + "\"/>\n";

  // ticks and labels, five per axis
  for (int t = 0; t < 5; ++t) {
    const double f = static_cast<double>(t) / 4.0;
    const double xv = rx.lo + f * (rx.hi - rx.lo);
    const double yv = ry.lo + f * (ry.hi - ry.lo);
    const double xp = px(xv);
    const double yp = py(yv);
    svg += "<polyline fill=\"none\" stroke=\"#333333\" stroke-width=\"1\" "
           "points=\"" +
           num(xp) + "," + num(kBottom) + " " + num(xp) + "," +
           num(kBottom + 6.0) + "\"/>\n";
    svg += "<text x=\"" + num(xp) + "\" y=\"" + num(kBottom + 20.0) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">" +
           num(xv, "%.4g") + "</text>\n";
    svg += "<polyline fill=\"none\" stroke=\"#333333\" stroke-width=\"1\" "
           "points=\"" +
           num(kLeft - 6.0) + "," + num(yp) + " " + num(kLeft) + "," +
           num(yp) + "\"/>\n";
    svg += "<text x=\"" + num(kLeft - 9.0) + "\" y=\"" + num(yp + 4.0) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\">" +
           num(yv, "%.4g") + "</text>\n";
  }

  svg += "<text x=\"" + num((kLeft + kRight) / 2.0) +
         "\" y=\"588\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\">" +
         escape_text(plot.x_label) + "</text>\n";
  svg += "<text transform=\"translate(18," + num((kTop + kBottom) / 2.0) +
         ") rotate(-90)\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"13\">" +
         escape_text(plot.y_label) + "</text>\n";

  for (const SvgSeries& s : plot.series) {
    const std::size_t n = std::min(s.x.size(), s.y.size());
    if (s.style == SvgSeries::Style::Line) {
      // split into segments at non-finite points
      std::string points;
      const auto flush = [&]() {
        if (!points.empty()) {
          svg += "<polyline fill=\"none\" stroke=\"" + s.color +
                 "\" stroke-width=\"" + num(s.width, "%.2f") + "\" points=\"" +
                 points + "\"/>\n";
          points.clear();
        }
      };
      for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
          flush();
          continue;
        }
        if (!points.empty()) points += ' ';
        points += num(px(s.x[i])) + "," + num(py(s.y[i]));
      }
      flush();
    } else {
      const double r = 3.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        const double cx = px(s.x[i]);
        const double cy = py(s.y[i]);
        svg += "<polyline fill=\"" + s.color + "\" stroke=\"none\" points=\"" +
               num(cx) + "," + num(cy - r) + " " + num(cx + r) + "," +
               num(cy) + " " + num(cx) + "," + num(cy + r) + " " +
               num(cx - r) + "," + num(cy) + " " + num(cx) + "," +
               num(cy - r) + "\"/>\n";
      }
    }
  }

  svg += "</svg>\n";
  return svg;
}

} // namespace gamlss
