#pragma once

#include <Eigen/Dense>

#include "scmtagg/panel.hpp"

namespace scmtagg {

enum class ObjectiveKind { Disaggregated, Aggregated, Combined };

/// Which pre-treatment imbalance to minimize. `nu` is the weight on the
/// aggregated objective and is only read for Combined.
struct ObjectiveSpec {
  ObjectiveKind kind = ObjectiveKind::Combined;
  double nu = 0.5;

  static ObjectiveSpec disaggregated() { return {ObjectiveKind::Disaggregated, 0.0}; }
  static ObjectiveSpec aggregated() { return {ObjectiveKind::Aggregated, 1.0}; }
  static ObjectiveSpec combined(double nu);

  /// Weight on the aggregated objective implied by the spec.
  double effective_nu() const noexcept;
};

const char* to_string(ObjectiveKind kind) noexcept;

/// q(gamma) = gamma' H gamma / 2 + b' gamma + c.
struct QuadraticForm {
  Eigen::MatrixXd hessian;
  Eigen::VectorXd linear;
  double constant = 0.0;

  double value(const Eigen::VectorXd& gamma) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& gamma) const;
  Eigen::Index dimension() const noexcept { return linear.size(); }
};

/// Mean squared pre-treatment gap over all (t, k) cells.
double q_dis(const DemeanedPanel& demeaned, const Eigen::VectorXd& gamma);

/// Mean squared pre-treatment gap between period averages.
double q_agg(const DemeanedPanel& demeaned, const Eigen::VectorXd& gamma);

/// (1 - nu) q_dis + nu q_agg.
double q_combined(const DemeanedPanel& demeaned, const Eigen::VectorXd& gamma, double nu);

/// Direct evaluation of whichever objective the spec names.
double evaluate(const DemeanedPanel& demeaned, const ObjectiveSpec& spec,
                const Eigen::VectorXd& gamma);

QuadraticForm to_quadratic(const DemeanedPanel& demeaned, const ObjectiveSpec& spec);

}  // namespace scmtagg
