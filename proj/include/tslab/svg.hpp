#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "tslab/errors.hpp"

namespace tslab {

/// One polyline on the plot.
struct SvgSeries {
  std::string label;
  std::vector<double> xs;
  std::vector<double> ys;
  std::string color = "#1f77b4";
};

/// Minimal built-in line renderer; display-only, no plotting dependency.
inline void write_line_plot(const std::string& path, const std::string& title,
                            const std::string& x_label, const std::string& y_label,
                            const std::vector<SvgSeries>& series) {
  const double width = 720, height = 480;
  const double ml = 70, mr = 20, mt = 40, mb = 50;
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool first = true;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      if (first) {
        xmin = xmax = s.xs[i];
        ymin = ymax = s.ys[i];
        first = false;
      }
      xmin = std::min(xmin, s.xs[i]);
      xmax = std::max(xmax, s.xs[i]);
      ymin = std::min(ymin, s.ys[i]);
      ymax = std::max(ymax, s.ys[i]);
    }
  }
  if (xmax - xmin < 1e-12) xmax = xmin + 1.0;
  if (ymax - ymin < 1e-12) ymax = ymin + 1.0;
  const auto px = [&](double x) {
    return ml + (x - xmin) / (xmax - xmin) * (width - ml - mr);
  };
  const auto py = [&](double y) {
    return height - mb - (y - ymin) / (ymax - ymin) * (height - mt - mb);
  };
  const auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return std::string(buf);
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"480\" "
         "viewBox=\"0 0 720 480\">\n";
  svg += "<rect width=\"720\" height=\"480\" fill=\"white\"/>\n";
  svg += "<text x=\"360\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" + title +
         "</text>\n";
  // axes
  char line[256];
  std::snprintf(line, sizeof(line),
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                "stroke=\"black\"/>\n",
                ml, height - mb, width - mr, height - mb);
  svg += line;
  std::snprintf(line, sizeof(line),
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                "stroke=\"black\"/>\n",
                ml, mt, ml, height - mb);
  svg += line;
  svg += "<text x=\"" + fmt(width / 2) + "\" y=\"" + fmt(height - 12) +
         "\" text-anchor=\"middle\" font-size=\"12\">" + x_label + "</text>\n";
  svg += "<text x=\"16\" y=\"" + fmt(height / 2) +
         "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 " +
         fmt(height / 2) + ")\">" + y_label + "</text>\n";
  // extremal tick labels
  svg += "<text x=\"" + fmt(ml) + "\" y=\"" + fmt(height - mb + 16) +
         "\" font-size=\"10\">" + fmt(xmin) + "</text>\n";
  svg += "<text x=\"" + fmt(width - mr - 30) + "\" y=\"" + fmt(height - mb + 16) +
         "\" font-size=\"10\">" + fmt(xmax) + "</text>\n";
  svg += "<text x=\"" + fmt(ml - 40) + "\" y=\"" + fmt(height - mb) +
         "\" font-size=\"10\">" + fmt(ymin) + "</text>\n";
  svg += "<text x=\"" + fmt(ml - 40) + "\" y=\"" + fmt(mt + 4) +
         "\" font-size=\"10\">" + fmt(ymax) + "</text>\n";

  double legend_y = mt + 10;
  for (const auto& s : series) {
    if (s.xs.size() != s.ys.size())
      throw DimensionMismatch("write_line_plot: series length mismatch");
    std::string points;
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      points += fmt(px(s.xs[i])) + "," + fmt(py(s.ys[i])) + " ";
    }
    svg += "<polyline fill=\"none\" stroke=\"" + s.color +
           "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
    svg += "<text x=\"" + fmt(width - mr - 150) + "\" y=\"" + fmt(legend_y) +
           "\" font-size=\"11\" fill=\"" + s.color + "\">" + s.label + "</text>\n";
    legend_y += 14;
  }
  svg += "</svg>\n";

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("write_line_plot: cannot open '" + path + "'");
  out << svg;
}

}  // namespace tslab
