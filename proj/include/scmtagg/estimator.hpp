#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scmtagg/objectives.hpp"
#include "scmtagg/panel.hpp"
#include "scmtagg/solver.hpp"

namespace scmtagg {

/// Fitted synthetic-control weights and their pre-treatment fit on both
/// scales, whichever objective produced them.
struct FitResult {
  Weights weights;
  ObjectiveKind kind = ObjectiveKind::Combined;
  double nu = 0.5;  // weight on the aggregated objective
  double rmse_dis = 0.0;
  double rmse_agg = 0.0;
  SolveReport solve;
};

struct EffectEstimate {
  std::int64_t period = 0;
  std::int64_t subperiod = 0;
  double observed = 0.0;
  double imputed = 0.0;
  double effect = 0.0;
};

struct FrontierPoint {
  double nu = 0.0;
  double rmse_dis = 0.0;
  double rmse_agg = 0.0;
  Weights weights;
  SolveReport solve;
};

struct PlaceboSeries {
  std::string unit;
  double rmse_dis = 0.0;
  double rmse_agg = 0.0;
  std::vector<EffectEstimate> effects;
};

FitResult fit(const PanelData& panel, const ObjectiveSpec& spec, const FeasibleSet& set,
              const SolverOptions& options = {});

/// Counterfactual for every post-treatment cell: the treated unit's
/// pre-period mean plus the weighted de-meaned donor outcomes.
std::vector<EffectEstimate> impute(const FitResult& fit, const PanelData& panel);

/// Equally spaced grid {0, 1/(points-1), ..., 1}.
std::vector<double> default_nu_grid(std::size_t points = 21);

/// One independent fit per nu. Each point equals fit() with
/// ObjectiveSpec::combined(nu) on the same inputs.
std::vector<FrontierPoint> frontier(const PanelData& panel, const std::vector<double>& nu_grid,
                                    const FeasibleSet& set, const SolverOptions& options = {});

/// Refits with each donor as the pseudo-treated unit, the real treated unit
/// removed from the pool. Results are in donor order. Only `set.c_bound` is
/// used; each placebo pool has one donor fewer than the real one.
std::vector<PlaceboSeries> placebo_in_space(const PanelData& panel, const ObjectiveSpec& spec,
                                            const FeasibleSet& set,
                                            const SolverOptions& options = {});

}  // namespace scmtagg
