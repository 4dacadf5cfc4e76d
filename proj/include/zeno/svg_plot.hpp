#pragma once

// Minimal deterministic SVG line plots: stacked panels, linear axes, nice
// tick steps, a small legend.  Byte-identical output for identical input.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "trace_io.hpp"

namespace zeno {

struct PlotSeries {
  std::string label;
  std::string color = "#1f6fb2";
  std::vector<double> x;
  std::vector<double> y;
  double stroke_width = 1.5;
  bool dashed = false;
};

struct PlotPanel {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
  bool zero_line = false;
};

namespace detail {

inline std::string svg_num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct AxisTicks {
  double lo = 0.0, hi = 1.0, step = 0.25;
};

inline AxisTicks nice_ticks(double lo, double hi) {
  if (!(hi > lo)) {
    const double pad = lo == 0.0 ? 1.0 : std::abs(lo) * 0.5;
    lo -= pad;
    hi += pad;
  }
  const double range = hi - lo;
  const double raw = range / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= m * mag) {
      step = m * mag;
      break;
    }
  }
  AxisTicks t;
  t.step = step;
  t.lo = std::floor(lo / step) * step;
  t.hi = std::ceil(hi / step) * step;
  return t;
}

}  // namespace detail

inline void write_svg_plot(const std::filesystem::path& file,
                           const std::vector<PlotPanel>& panels,
                           int width = 860, int panel_height = 300) {
  if (panels.empty()) throw std::invalid_argument("no panels to plot");
  const int ml = 78, mr = 24, mt = 40, mb = 52;
  const int total_h = panel_height * static_cast<int>(panels.size());

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
     << "\" height=\"" << total_h << "\" viewBox=\"0 0 " << width << " "
     << total_h << "\">\n";
  os << "<rect width=\"" << width << "\" height=\"" << total_h
     << "\" fill=\"white\"/>\n";

  for (std::size_t ip = 0; ip < panels.size(); ++ip) {
    const auto& panel = panels[ip];
    const int top = static_cast<int>(ip) * panel_height;
    const double px0 = ml, px1 = width - mr;
    const double py0 = top + mt, py1 = top + panel_height - mb;

    double xmin = std::numeric_limits<double>::infinity();
    double xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (const auto& s : panel.series) {
      if (s.x.size() != s.y.size())
        throw std::invalid_argument("series x/y lengths differ");
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        xmin = std::min(xmin, s.x[i]);
        xmax = std::max(xmax, s.x[i]);
        ymin = std::min(ymin, s.y[i]);
        ymax = std::max(ymax, s.y[i]);
      }
    }
    if (!std::isfinite(xmin) || !std::isfinite(ymin))
      throw std::invalid_argument("panel has no finite data");
    if (panel.zero_line) {
      ymin = std::min(ymin, 0.0);
      ymax = std::max(ymax, 0.0);
    }
    const auto tx = detail::nice_ticks(xmin, xmax);
    const auto ty = detail::nice_ticks(ymin, ymax);
    const auto sx = [&](double v) {
      return px0 + (v - tx.lo) / (tx.hi - tx.lo) * (px1 - px0);
    };
    const auto sy = [&](double v) {
      return py1 - (v - ty.lo) / (ty.hi - ty.lo) * (py1 - py0);
    };

    os << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect x=\"" << detail::svg_num(px0) << "\" y=\""
       << detail::svg_num(py0) << "\" width=\"" << detail::svg_num(px1 - px0)
       << "\" height=\"" << detail::svg_num(py1 - py0)
       << "\" fill=\"none\" stroke=\"#333\"/>\n";
    if (!panel.title.empty())
      os << "<text x=\"" << detail::svg_num(0.5 * (px0 + px1)) << "\" y=\""
         << detail::svg_num(py0 - 14)
         << "\" text-anchor=\"middle\" font-size=\"14\">" << panel.title
         << "</text>\n";

    const int nx = static_cast<int>(std::lround((tx.hi - tx.lo) / tx.step));
    for (int i = 0; i <= nx; ++i) {
      const double v = tx.lo + i * tx.step;
      const double X = sx(v);
      os << "<line x1=\"" << detail::svg_num(X) << "\" y1=\""
         << detail::svg_num(py1) << "\" x2=\"" << detail::svg_num(X)
         << "\" y2=\"" << detail::svg_num(py1 + 5)
         << "\" stroke=\"#333\"/>\n";
      os << "<text x=\"" << detail::svg_num(X) << "\" y=\""
         << detail::svg_num(py1 + 19) << "\" text-anchor=\"middle\">"
         << detail::svg_num(v) << "</text>\n";
    }
    const int ny = static_cast<int>(std::lround((ty.hi - ty.lo) / ty.step));
    for (int i = 0; i <= ny; ++i) {
      const double v = ty.lo + i * ty.step;
      const double Y = sy(v);
      os << "<line x1=\"" << detail::svg_num(px0 - 5) << "\" y1=\""
         << detail::svg_num(Y) << "\" x2=\"" << detail::svg_num(px0)
         << "\" y2=\"" << detail::svg_num(Y) << "\" stroke=\"#333\"/>\n";
      os << "<text x=\"" << detail::svg_num(px0 - 8) << "\" y=\""
         << detail::svg_num(Y + 4) << "\" text-anchor=\"end\">"
         << detail::svg_num(v) << "</text>\n";
    }
    if (!panel.x_label.empty())
      os << "<text x=\"" << detail::svg_num(0.5 * (px0 + px1)) << "\" y=\""
         << detail::svg_num(py1 + 40) << "\" text-anchor=\"middle\">"
         << panel.x_label << "</text>\n";
    if (!panel.y_label.empty())
      os << "<text x=\"" << detail::svg_num(px0 - 58) << "\" y=\""
         << detail::svg_num(0.5 * (py0 + py1))
         << "\" text-anchor=\"middle\" transform=\"rotate(-90 "
         << detail::svg_num(px0 - 58) << " "
         << detail::svg_num(0.5 * (py0 + py1)) << ")\">" << panel.y_label
         << "</text>\n";

    if (panel.zero_line && ty.lo < 0.0 && ty.hi > 0.0)
      os << "<line x1=\"" << detail::svg_num(px0) << "\" y1=\""
         << detail::svg_num(sy(0.0)) << "\" x2=\"" << detail::svg_num(px1)
         << "\" y2=\"" << detail::svg_num(sy(0.0))
         << "\" stroke=\"#999\" stroke-dasharray=\"3,3\"/>\n";

    for (const auto& s : panel.series) {
      if (s.x.empty()) continue;
      os << "<polyline fill=\"none\" stroke=\"" << s.color
         << "\" stroke-width=\"" << detail::svg_num(s.stroke_width) << "\"";
      if (s.dashed) os << " stroke-dasharray=\"6,4\"";
      os << " points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i)
        os << detail::svg_num(sx(s.x[i])) << ',' << detail::svg_num(sy(s.y[i]))
           << ' ';
      os << "\"/>\n";
    }

    double ly = py0 + 14;
    for (const auto& s : panel.series) {
      if (s.label.empty()) continue;
      os << "<line x1=\"" << detail::svg_num(px1 - 150) << "\" y1=\""
         << detail::svg_num(ly - 4) << "\" x2=\"" << detail::svg_num(px1 - 122)
         << "\" y2=\"" << detail::svg_num(ly - 4) << "\" stroke=\"" << s.color
         << "\" stroke-width=\"2\"";
      if (s.dashed) os << " stroke-dasharray=\"6,4\"";
      os << "/>\n";
      os << "<text x=\"" << detail::svg_num(px1 - 116) << "\" y=\""
         << detail::svg_num(ly) << "\">" << s.label << "</text>\n";
      ly += 16;
    }
    os << "</g>\n";
  }
  os << "</svg>\n";
  detail::atomic_write(file, os.str());
}

}  // namespace zeno
