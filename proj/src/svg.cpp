#include "oamturb/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

namespace oamturb {

namespace {

constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string coord(double v) { return fmt::format("{:.2f}", v); }

// "nice" linear ticks covering [lo, hi]
std::vector<double> linear_ticks(double lo, double hi) {
  const double span = hi - lo;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  std::vector<double> out;
  for (double t = std::ceil(lo / step - 1e-9) * step; t <= hi + 1e-9 * span; t += step) out.push_back(t);
  return out;
}

} // namespace

std::string render_svg(const PlotSpec& spec, std::span<const PlotSeries> series) {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = 0.0, ymax = 0.0;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("plot series x/y length mismatch");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (spec.log_x && !(s.x[i] > 0.0)) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      const double hi = s.y[i] + (i < s.err_hi.size() ? s.err_hi[i] : 0.0);
      const double lo = s.y[i] - (i < s.err_lo.size() ? s.err_lo[i] : 0.0);
      ymax = std::max(ymax, hi);
      ymin = std::min(ymin, lo);
    }
  }
  if (!(xmax >= xmin)) throw std::invalid_argument("nothing to plot");
  if (xmax == xmin) {
    xmin = spec.log_x ? xmin / 2.0 : xmin - 1.0;
    xmax = spec.log_x ? xmax * 2.0 : xmax + 1.0;
  }
  if (ymax == ymin) ymax = ymin + 1.0;
  ymax *= 1.05;

  const double left = 70, right = 170, top = 40, bottom = 55;
  const double pw = spec.width - left - right;
  const double ph = spec.height - top - bottom;
  const double lx0 = spec.log_x ? std::log10(xmin) : xmin;
  const double lx1 = spec.log_x ? std::log10(xmax) : xmax;
  auto px = [&](double x) { return left + ((spec.log_x ? std::log10(x) : x) - lx0) / (lx1 - lx0) * pw; };
  auto py = [&](double y) { return top + (ymax - y) / (ymax - ymin) * ph; };

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n",
      spec.width, spec.height, spec.width, spec.height);
  out += fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", spec.width, spec.height);
  out += fmt::format("<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
                     coord(left + pw / 2), escape(spec.title));

  // axes box
  out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
                     coord(left), coord(top), coord(pw), coord(ph));

  // x ticks
  if (spec.log_x) {
    for (int d = static_cast<int>(std::floor(lx0)); d <= static_cast<int>(std::ceil(lx1)); ++d) {
      for (int m = 1; m <= 9; ++m) {
        const double x = m * std::pow(10.0, d);
        if (x < xmin * (1 - 1e-12) || x > xmax * (1 + 1e-12)) continue;
        const double X = px(x);
        const double len = m == 1 ? 6 : 3;
        out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", coord(X),
                           coord(top + ph), coord(top + ph - len));
        if (m == 1)
          out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", coord(X),
                             coord(top + ph + 18), fmt::format("{:g}", x));
      }
    }
  } else {
    for (double x : linear_ticks(xmin, xmax)) {
      const double X = px(x);
      out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", coord(X),
                         coord(top + ph), coord(top + ph - 6));
      out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", coord(X),
                         coord(top + ph + 18), fmt::format("{:g}", x));
    }
  }
  for (double y : linear_ticks(ymin, ymax)) {
    const double Y = py(y);
    out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", coord(left), coord(Y),
                       coord(left + 6));
    out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", coord(left - 6), coord(Y + 4),
                       fmt::format("{:g}", y));
  }
  out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", coord(left + pw / 2),
                     coord(spec.height - 12), escape(spec.x_label));
  out += fmt::format("<text x=\"16\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {0})\">{1}</text>\n",
                     coord(top + ph / 2), escape(spec.y_label));

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = palette[k % std::size(palette)];
    std::string points;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (spec.log_x && !(s.x[i] > 0.0)) continue;
      if (!points.empty()) points += ' ';
      points += coord(px(s.x[i])) + "," + coord(py(s.y[i]));
    }
    out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"{} points=\"{}\"/>\n", color,
                       s.dashed ? " stroke-dasharray=\"5,4\"" : "", points);
    for (std::size_t i = 0; i < s.x.size() && i < s.err_lo.size() && i < s.err_hi.size(); ++i) {
      if (spec.log_x && !(s.x[i] > 0.0)) continue;
      if (s.err_lo[i] == 0.0 && s.err_hi[i] == 0.0) continue;
      const double X = px(s.x[i]);
      out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"{3}\"/>\n", coord(X),
                         coord(py(s.y[i] - s.err_lo[i])), coord(py(s.y[i] + s.err_hi[i])), color);
    }
    const double ly = top + 10 + 18.0 * static_cast<double>(k);
    out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{3}\" stroke-width=\"1.5\"{4}/>\n",
                       coord(left + pw + 12), coord(ly), coord(left + pw + 36), color,
                       s.dashed ? " stroke-dasharray=\"5,4\"" : "");
    out += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", coord(left + pw + 42), coord(ly + 4), escape(s.label));
  }
  out += "</svg>\n";
  return out;
}

} // namespace oamturb
