#pragma once

#include <span>
#include <string>
#include <vector>

namespace oamturb {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> err_lo;  ///< empty for no error bars
  std::vector<double> err_hi;
  bool dashed = false;
};

struct PlotSpec {
  std::string title;
  std::string x_label = "D/r0";
  std::string y_label = "capacity (bits/photon)";
  bool log_x = true;
  int width = 720;
  int height = 480;
};

/// Static SVG line plot with axes, ticks, legend and optional error bars.
/// Output depends only on the inputs, so re-plotting the same data yields
/// identical bytes.
std::string render_svg(const PlotSpec& spec, std::span<const PlotSeries> series);

} // namespace oamturb
