#pragma once

#include <cstddef>
#include <functional>
#include <optional>

#include <Eigen/Dense>

#include "scmtagg/objectives.hpp"

namespace scmtagg {

/// { gamma in R^n : ||gamma||_1 <= c_bound, sum(gamma) = 1 }. Nonempty iff c_bound >= 1.
struct FeasibleSet {
  double c_bound = 1.0;
  std::size_t dimension = 1;

  FeasibleSet() = default;
  FeasibleSet(double c, std::size_t n);

  /// Largest and smallest coordinate any vertex uses: (1 + C) / 2 and (1 - C) / 2.
  double vertex_high() const noexcept { return 0.5 * (1.0 + c_bound); }
  double vertex_low() const noexcept { return 0.5 * (1.0 - c_bound); }
};

/// Donor weights with their distance from the constraint set.
struct Weights {
  Eigen::VectorXd gamma;
  double feasibility_slack = 0.0;  // max(||gamma||_1 - C, |sum - 1|)

  static Weights make(Eigen::VectorXd gamma, double c_bound);
  static Weights uniform(std::size_t n);
};

struct SolverOptions {
  /// Absolute gap tolerance. Unset means 1e-10 * (1 + objective at start).
  std::optional<double> tol;
  std::size_t max_iter = 100000;
  /// Called after every step with the iteration count and objective value.
  std::function<void(std::size_t, double)> on_iteration;
};

struct SolveReport {
  Weights weights;
  double objective_value = 0.0;
  double fw_gap = 0.0;
  double tolerance = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Exact linear minimization of gradient . gamma over the feasible set.
/// Ties go to the lowest index.
Weights lmo(const Eigen::VectorXd& gradient, const FeasibleSet& set);

/// Pairwise Frank-Wolfe with exact line search. The iterate is kept as an
/// explicit convex combination of vertices, so every iterate is feasible and
/// the reported gap bounds objective_value - min.
SolveReport frank_wolfe(const QuadraticForm& objective, const FeasibleSet& set,
                        const SolverOptions& options = {},
                        const std::optional<Weights>& start = std::nullopt);

/// Brute-force minimizer over a regular grid of the first n-1 coordinates.
/// Test oracle only; n <= 4.
Weights grid_oracle(const QuadraticForm& objective, const FeasibleSet& set, double resolution);

}  // namespace scmtagg
