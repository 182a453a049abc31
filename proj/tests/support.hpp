#pragma once

#include <random>

#include "scmtagg/panel.hpp"
#include "scmtagg/solver.hpp"

namespace testing {

using scmtagg::Cube;
using scmtagg::PanelData;

inline Cube random_cube(std::mt19937_64& rng, std::size_t units, std::size_t periods,
                        std::size_t subperiods, double scale = 1.0) {
  std::normal_distribution<double> z(0.0, scale);
  Cube c(units, periods, subperiods);
  for (std::size_t i = 0; i < units; ++i)
    for (std::size_t t = 0; t < periods; ++t)
      for (std::size_t k = 0; k < subperiods; ++k) c(i, t, k) = z(rng);
  return c;
}

inline PanelData random_panel(std::mt19937_64& rng, std::size_t units, std::size_t t0, std::size_t post,
                              std::size_t subperiods) {
  return PanelData(random_cube(rng, units, t0 + post, subperiods), t0);
}

inline std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline double uniform(std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Random point of {||g||_1 <= c, sum g = 1}: a convex mix of random vertices.
inline Eigen::VectorXd random_feasible(std::mt19937_64& rng, std::size_t n, double c) {
  const auto dim = static_cast<Eigen::Index>(n);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
  if (n == 1) {
    g(0) = 1.0;
    return g;
  }
  std::exponential_distribution<double> e(1.0);
  double total = 0.0;
  const std::size_t pieces = pick(rng, 1, 2 * n);
  for (std::size_t p = 0; p < pieces; ++p) {
    const double w = e(rng);
    const auto i = static_cast<Eigen::Index>(pick(rng, 0, n - 1));
    auto j = static_cast<Eigen::Index>(pick(rng, 0, n - 2));
    if (j >= i) ++j;
    g(i) += w * 0.5 * (1.0 + c);
    g(j) += w * 0.5 * (1.0 - c);
    total += w;
  }
  return g / total;
}

}  // namespace testing
