#include <algorithm>
#include <cmath>
#include <sstream>

#include "scmtagg/cli.hpp"

namespace scmtagg::cli {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 30.0;
constexpr double kTop = 30.0;
constexpr double kBottom = 70.0;

struct Axis {
  double lo;
  double hi;

  static Axis around(double lo, double hi) {
    if (!(hi > lo)) {
      const double pad = std::max(1e-12, std::abs(hi) * 0.05 + 1e-3);
      return {std::max(0.0, lo - pad), hi + pad};
    }
    const double pad = 0.05 * (hi - lo);
    return {std::max(0.0, lo - pad), hi + pad};
  }
  double frac(double v) const { return (v - lo) / (hi - lo); }
};

std::string fixed(double v) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(2);
  s << v;
  return s.str();
}

std::string tick_label(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

}  // namespace

std::string frontier_svg(const std::vector<FrontierPoint>& points) {
  double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;
  if (!points.empty()) {
    xmin = xmax = points.front().rmse_dis;
    ymin = ymax = points.front().rmse_agg;
    for (const auto& p : points) {
      xmin = std::min(xmin, p.rmse_dis);
      xmax = std::max(xmax, p.rmse_dis);
      ymin = std::min(ymin, p.rmse_agg);
      ymax = std::max(ymax, p.rmse_agg);
    }
  }
  const Axis ax = Axis::around(xmin, xmax);
  const Axis ay = Axis::around(ymin, ymax);
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double v) { return kLeft + ax.frac(v) * plot_w; };
  auto py = [&](double v) { return kTop + (1.0 - ay.frac(v)) * plot_h; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<title>Imbalance frontier</title>\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
  svg << "<g class=\"axes\" stroke=\"black\">\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
      << kTop + plot_h << "\"/>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + plot_h
      << "\"/>\n";
  svg << "</g>\n";

  svg << "<g class=\"ticks\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = ax.lo + (ax.hi - ax.lo) * i / 4.0;
    const double yv = ay.lo + (ay.hi - ay.lo) * i / 4.0;
    svg << "<text x=\"" << fixed(px(xv)) << "\" y=\"" << fixed(kTop + plot_h + 18)
        << "\" text-anchor=\"middle\">" << tick_label(xv) << "</text>\n";
    svg << "<text x=\"" << fixed(kLeft - 8) << "\" y=\"" << fixed(py(yv) + 4) << "\" text-anchor=\"end\">"
        << tick_label(yv) << "</text>\n";
  }
  svg << "</g>\n";

  svg << "<text class=\"x-label\" x=\"" << fixed(kLeft + plot_w / 2) << "\" y=\"" << fixed(kHeight - 20)
      << "\" text-anchor=\"middle\">Pre-treatment fit, disaggregated series (RMSE)</text>\n";
  svg << "<text class=\"y-label\" x=\"20\" y=\"" << fixed(kTop + plot_h / 2)
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 " << fixed(kTop + plot_h / 2)
      << ")\">Pre-treatment fit, aggregated series (RMSE)</text>\n";

  if (!points.empty()) {
    svg << "<polyline class=\"frontier\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < points.size(); ++i) {
      svg << (i ? " " : "") << fixed(px(points[i].rmse_dis)) << ',' << fixed(py(points[i].rmse_agg));
    }
    svg << "\"/>\n";
  }
  svg << "<g class=\"points\" fill=\"steelblue\">\n";
  for (const auto& p : points) {
    svg << "<circle class=\"frontier-point\" cx=\"" << fixed(px(p.rmse_dis)) << "\" cy=\""
        << fixed(py(p.rmse_agg)) << "\" r=\"3.5\"><title>nu = " << tick_label(p.nu) << "</title></circle>\n";
  }
  svg << "</g>\n";

  // Mark the equal-weight point when the grid contains it.
  for (const auto& p : points) {
    if (std::abs(p.nu - 0.5) < 1e-12) {
      svg << "<circle class=\"combined\" cx=\"" << fixed(px(p.rmse_dis)) << "\" cy=\"" << fixed(py(p.rmse_agg))
          << "\" r=\"6\" fill=\"none\" stroke=\"firebrick\" stroke-width=\"2\"/>\n";
      svg << "<text x=\"" << fixed(px(p.rmse_dis) + 9) << "\" y=\"" << fixed(py(p.rmse_agg) - 9)
          << "\" fill=\"firebrick\">Aggregated + disaggregated (nu = 0.5)</text>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace scmtagg::cli
