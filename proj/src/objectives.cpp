#include "scmtagg/objectives.hpp"

#include <cmath>
#include <string>

namespace scmtagg {

namespace {

void check_nu(double nu) {
  if (!(nu >= 0.0 && nu <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "nu must lie in [0, 1], got " + std::to_string(nu));
  }
}

void check_dims(const DemeanedPanel& d, const Eigen::VectorXd& gamma) {
  if (d.demeaned.units() < 2 || static_cast<std::size_t>(gamma.size()) != d.demeaned.units() - 1) {
    throw Error(ErrorCode::DimensionMismatch,
                "weights have length " + std::to_string(gamma.size()) + ", expected " +
                    std::to_string(d.demeaned.units() - 1));
  }
  if (d.t0 < 1 || d.t0 > d.demeaned.periods()) {
    throw Error(ErrorCode::T0OutOfRange, "demeaned panel has no pre-treatment periods");
  }
}

// Rows are pre-treatment cells, columns are donors.
struct Design {
  Eigen::MatrixXd donors;
  Eigen::VectorXd treated;
};

Design disaggregated_design(const DemeanedPanel& d) {
  const Cube& y = d.demeaned;
  const std::size_t rows = d.t0 * y.subperiods();
  const std::size_t n0 = y.units() - 1;
  Design out{Eigen::MatrixXd(rows, n0), Eigen::VectorXd(rows)};
  for (std::size_t c = 0; c < rows; ++c) {
    out.treated(c) = y.unit(0)[c];
    for (std::size_t j = 0; j < n0; ++j) out.donors(c, j) = y.unit(j + 1)[c];
  }
  return out;
}

Design aggregated_design(const DemeanedPanel& d) {
  const AggregatedSeries agg = aggregate(d.demeaned);
  const std::size_t n0 = agg.units - 1;
  Design out{Eigen::MatrixXd(d.t0, n0), Eigen::VectorXd(d.t0)};
  for (std::size_t t = 0; t < d.t0; ++t) {
    out.treated(t) = agg(0, t);
    for (std::size_t j = 0; j < n0; ++j) out.donors(t, j) = agg(j + 1, t);
  }
  return out;
}

QuadraticForm least_squares_form(const Design& design) {
  // mean of squares (y - X g)^2 => H = 2 X'X / n, b = -2 X'y / n, c = y'y / n
  const double n = static_cast<double>(design.treated.size());
  QuadraticForm q;
  q.hessian = (2.0 / n) * (design.donors.transpose() * design.donors);
  q.hessian = 0.5 * (q.hessian + q.hessian.transpose()).eval();
  q.linear = (-2.0 / n) * (design.donors.transpose() * design.treated);
  CompensatedSum c;
  for (Eigen::Index r = 0; r < design.treated.size(); ++r) c.add(design.treated(r) * design.treated(r));
  q.constant = c.value() / n;
  return q;
}

}  // namespace

ObjectiveSpec ObjectiveSpec::combined(double nu) {
  check_nu(nu);
  return {ObjectiveKind::Combined, nu};
}

double ObjectiveSpec::effective_nu() const noexcept {
  switch (kind) {
    case ObjectiveKind::Disaggregated: return 0.0;
    case ObjectiveKind::Aggregated: return 1.0;
    case ObjectiveKind::Combined: return nu;
  }
  return nu;
}

const char* to_string(ObjectiveKind kind) noexcept {
  switch (kind) {
    case ObjectiveKind::Disaggregated: return "disaggregated";
    case ObjectiveKind::Aggregated: return "aggregated";
    case ObjectiveKind::Combined: return "combined";
  }
  return "unknown";
}

double QuadraticForm::value(const Eigen::VectorXd& gamma) const {
  return 0.5 * gamma.dot(hessian * gamma) + linear.dot(gamma) + constant;
}

Eigen::VectorXd QuadraticForm::gradient(const Eigen::VectorXd& gamma) const {
  return hessian * gamma + linear;
}

double q_dis(const DemeanedPanel& demeaned, const Eigen::VectorXd& gamma) {
  check_dims(demeaned, gamma);
  const Cube& y = demeaned.demeaned;
  const std::size_t cells = demeaned.t0 * y.subperiods();
  CompensatedSum sum;
  for (std::size_t c = 0; c < cells; ++c) {
    CompensatedSum synthetic;
    for (Eigen::Index j = 0; j < gamma.size(); ++j) {
      synthetic.add(gamma(j) * y.unit(static_cast<std::size_t>(j) + 1)[c]);
    }
    const double gap = y.unit(0)[c] - synthetic.value();
    sum.add(gap * gap);
  }
  return sum.value() / static_cast<double>(cells);
}

double q_agg(const DemeanedPanel& demeaned, const Eigen::VectorXd& gamma) {
  check_dims(demeaned, gamma);
  const AggregatedSeries agg = aggregate(demeaned.demeaned);
  CompensatedSum sum;
  for (std::size_t t = 0; t < demeaned.t0; ++t) {
    CompensatedSum synthetic;
    for (Eigen::Index j = 0; j < gamma.size(); ++j) {
      synthetic.add(gamma(j) * agg(static_cast<std::size_t>(j) + 1, t));
    }
    const double gap = agg(0, t) - synthetic.value();
    sum.add(gap * gap);
  }
  return sum.value() / static_cast<double>(demeaned.t0);
}

double q_combined(const DemeanedPanel& demeaned, const Eigen::VectorXd& gamma, double nu) {
  check_nu(nu);
  // With one subperiod the two objectives coincide.
  if (nu == 0.0 || demeaned.demeaned.subperiods() == 1) return q_dis(demeaned, gamma);
  if (nu == 1.0) return q_agg(demeaned, gamma);
  return (1.0 - nu) * q_dis(demeaned, gamma) + nu * q_agg(demeaned, gamma);
}

double evaluate(const DemeanedPanel& demeaned, const ObjectiveSpec& spec,
                const Eigen::VectorXd& gamma) {
  return q_combined(demeaned, gamma, spec.effective_nu());
}

QuadraticForm to_quadratic(const DemeanedPanel& demeaned, const ObjectiveSpec& spec) {
  const double nu = spec.effective_nu();
  check_nu(nu);
  if (nu == 0.0 || demeaned.demeaned.subperiods() == 1) return least_squares_form(disaggregated_design(demeaned));
  if (nu == 1.0) return least_squares_form(aggregated_design(demeaned));
  const QuadraticForm dis = least_squares_form(disaggregated_design(demeaned));
  const QuadraticForm agg = least_squares_form(aggregated_design(demeaned));
  return {(1.0 - nu) * dis.hessian + nu * agg.hessian, (1.0 - nu) * dis.linear + nu * agg.linear,
          (1.0 - nu) * dis.constant + nu * agg.constant};
}

}  // namespace scmtagg
