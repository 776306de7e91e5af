#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "page/harness/experiment.hpp"
#include "page/harness/sweep.hpp"

namespace page::harness {

/// Log-log scatter of (predicted, measured) pairs joined in grid order.
/// Non-positive or non-finite pairs are dropped.
inline void write_loglog_svg(std::ostream& os, const std::vector<std::pair<double, double>>& raw,
                             const std::string& title, const std::string& xlabel, const std::string& ylabel) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& [x, y] : raw)
    if (x > 0 && y > 0 && std::isfinite(x) && std::isfinite(y)) pts.emplace_back(std::log10(x), std::log10(y));

  const double W = 640, H = 480, M = 60;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (!pts.empty()) {
    x0 = x1 = pts[0].first;
    y0 = y1 = pts[0].second;
    for (const auto& [x, y] : pts) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
    x0 = std::floor(x0);
    y0 = std::floor(y0);
    x1 = std::max(std::ceil(x1), x0 + 1);
    y1 = std::max(std::ceil(y1), y0 + 1);
  }
  auto sx = [&](double x) { return M + (x - x0) / (x1 - x0) * (W - 2 * M); };
  auto sy = [&](double y) { return H - M - (y - y0) / (y1 - y0) * (H - 2 * M); };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title << "</text>\n";
  os << "<line x1=\"" << M << "\" y1=\"" << H - M << "\" x2=\"" << W - M << "\" y2=\"" << H - M
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << M << "\" y1=\"" << M << "\" x2=\"" << M << "\" y2=\"" << H - M << "\" stroke=\"black\"/>\n";
  for (double d = x0; d <= x1 + 1e-9; d += 1)
    os << "<text x=\"" << sx(d) << "\" y=\"" << H - M + 18 << "\" text-anchor=\"middle\" font-size=\"11\">1e"
       << static_cast<int>(d) << "</text>\n";
  for (double d = y0; d <= y1 + 1e-9; d += 1)
    os << "<text x=\"" << M - 6 << "\" y=\"" << sy(d) + 4 << "\" text-anchor=\"end\" font-size=\"11\">1e"
       << static_cast<int>(d) << "</text>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"" << H - 14 << "\" text-anchor=\"middle\" font-size=\"12\">" << xlabel
     << " (log10)</text>\n";
  os << "<text x=\"16\" y=\"" << H / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
     << H / 2 << ")\">" << ylabel << " (log10)</text>\n";
  if (pts.size() > 1) {
    os << "<polyline fill=\"none\" stroke=\"steelblue\" points=\"";
    for (const auto& [x, y] : pts) os << sx(x) << ',' << sy(y) << ' ';
    os << "\"/>\n";
  }
  for (const auto& [x, y] : pts)
    os << "<circle cx=\"" << sx(x) << "\" cy=\"" << sy(y) << "\" r=\"4\" fill=\"steelblue\"/>\n";
  os << "</svg>\n";
}

inline void write_sweep_svg(std::ostream& os, const SweepResult& res) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& p : res.points)
    if (p.crossing.iterations)
      pts.emplace_back(p.predicted_iterations, static_cast<double>(*p.crossing.iterations));
  write_loglog_svg(os, pts, "measured vs predicted iterations", "predicted iterations", "measured iterations");
}

}  // namespace page::harness
