#include "scmtagg/estimator.hpp"

#include <algorithm>
#include <cmath>

#include "scmtagg/parallel.hpp"

namespace scmtagg {

namespace {

FitResult fit_demeaned(const DemeanedPanel& demeaned, const ObjectiveSpec& spec,
                       const FeasibleSet& set, const SolverOptions& options) {
  const QuadraticForm objective = to_quadratic(demeaned, spec);
  FitResult out;
  out.solve = frank_wolfe(objective, set, options);
  out.weights = out.solve.weights;
  out.kind = spec.kind;
  out.nu = spec.effective_nu();
  out.rmse_dis = std::sqrt(q_dis(demeaned, out.weights.gamma));
  out.rmse_agg = std::sqrt(q_agg(demeaned, out.weights.gamma));
  return out;
}

std::vector<EffectEstimate> impute_demeaned(const Eigen::VectorXd& gamma, const PanelData& panel,
                                            const DemeanedPanel& demeaned) {
  if (static_cast<std::size_t>(gamma.size()) != panel.n_donors()) {
    throw Error(ErrorCode::DimensionMismatch, "weights do not match the donor pool");
  }
  std::vector<EffectEstimate> out;
  out.reserve(panel.n_post() * panel.n_subperiods());
  for (std::size_t t = panel.t0(); t < panel.n_periods(); ++t) {
    for (std::size_t k = 0; k < panel.n_subperiods(); ++k) {
      CompensatedSum synthetic;
      for (std::size_t j = 0; j < panel.n_donors(); ++j) {
        synthetic.add(gamma(static_cast<Eigen::Index>(j)) * demeaned.demeaned(j + 1, t, k));
      }
      EffectEstimate e;
      e.period = panel.period_labels()[t];
      e.subperiod = panel.subperiod_labels()[k];
      e.observed = panel.outcomes()(0, t, k);
      e.imputed = demeaned.pre_means[0] + synthetic.value();
      e.effect = e.observed - e.imputed;
      out.push_back(e);
    }
  }
  return out;
}

}  // namespace

FitResult fit(const PanelData& panel, const ObjectiveSpec& spec, const FeasibleSet& set,
              const SolverOptions& options) {
  if (set.dimension != panel.n_donors()) {
    throw Error(ErrorCode::DimensionMismatch, "weight set dimension does not match the donor pool");
  }
  return fit_demeaned(demean(panel), spec, set, options);
}

std::vector<EffectEstimate> impute(const FitResult& fit, const PanelData& panel) {
  return impute_demeaned(fit.weights.gamma, panel, demean(panel));
}

std::vector<double> default_nu_grid(std::size_t points) {
  if (points < 2) throw Error(ErrorCode::InvalidArgument, "nu grid needs at least two points");
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i) {
    grid[i] = static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return grid;
}

std::vector<FrontierPoint> frontier(const PanelData& panel, const std::vector<double>& nu_grid,
                                    const FeasibleSet& set, const SolverOptions& options) {
  if (nu_grid.empty()) throw Error(ErrorCode::InvalidArgument, "nu grid is empty");
  for (std::size_t i = 0; i < nu_grid.size(); ++i) {
    if (!(nu_grid[i] >= 0.0 && nu_grid[i] <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "nu grid values must lie in [0, 1]");
    }
    if (i > 0 && !(nu_grid[i] > nu_grid[i - 1])) {
      throw Error(ErrorCode::InvalidArgument, "nu grid must be strictly increasing");
    }
  }
  if (set.dimension != panel.n_donors()) {
    throw Error(ErrorCode::DimensionMismatch, "weight set dimension does not match the donor pool");
  }
  const DemeanedPanel demeaned = demean(panel);
  std::vector<FrontierPoint> points(nu_grid.size());
  parallel_for(nu_grid.size(), [&](std::size_t i) {
    const FitResult r = fit_demeaned(demeaned, ObjectiveSpec::combined(nu_grid[i]), set, options);
    points[i] = FrontierPoint{nu_grid[i], r.rmse_dis, r.rmse_agg, r.weights, r.solve};
  });
  return points;
}

std::vector<PlaceboSeries> placebo_in_space(const PanelData& panel, const ObjectiveSpec& spec,
                                            const FeasibleSet& set, const SolverOptions& options) {
  if (panel.n_units() < 3) {
    throw Error(ErrorCode::InsufficientDonors, "placebo analysis needs at least two donors");
  }
  const std::size_t donors = panel.n_donors();
  std::vector<PlaceboSeries> out(donors);
  const std::size_t real_treated[] = {PanelData::treated_index()};
  parallel_for(donors, [&](std::size_t d) {
    const PanelData pseudo = panel.with_treated(d + 1, real_treated);
    const DemeanedPanel demeaned = demean(pseudo);
    const FitResult r =
        fit_demeaned(demeaned, spec, FeasibleSet(set.c_bound, pseudo.n_donors()), options);
    out[d] = PlaceboSeries{pseudo.unit_labels()[0], r.rmse_dis, r.rmse_agg,
                           impute_demeaned(r.weights.gamma, pseudo, demeaned)};
  });
  return out;
}

}  // namespace scmtagg
