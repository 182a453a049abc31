#include "json.hpp"
#include "scmtagg/cli.hpp"

namespace scmtagg::cli {

using ordered_json = nlohmann::ordered_json;

namespace {

// Named by the effective nu so that equivalent specs serialize identically.
const char* objective_name(double nu) {
  if (nu == 0.0) return "disaggregated";
  if (nu == 1.0) return "aggregated";
  return "combined";
}

ordered_json optional_number(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

ordered_json solve_json(const SolveReport& s) {
  ordered_json j;
  j["objective_value"] = s.objective_value;
  j["fw_gap"] = s.fw_gap;
  j["tolerance"] = s.tolerance;
  j["iterations"] = s.iterations;
  j["converged"] = s.converged;
  return j;
}

}  // namespace

std::string fit_json(const FitResult& fit, const PanelData& panel, double c_bound) {
  ordered_json j;
  j["schema_version"] = 1;
  j["objective"] = objective_name(fit.nu);
  j["nu"] = fit.nu;
  j["c_bound"] = c_bound;
  j["treated_unit"] = panel.unit_labels()[0];
  ordered_json weights = ordered_json::array();
  for (std::size_t d = 0; d < panel.n_donors(); ++d) {
    ordered_json w;
    w["unit"] = panel.unit_labels()[d + 1];
    w["weight"] = fit.weights.gamma(static_cast<Eigen::Index>(d));
    weights.push_back(w);
  }
  j["weights"] = weights;
  j["feasibility_slack"] = fit.weights.feasibility_slack;
  j["rmse_dis"] = fit.rmse_dis;
  j["rmse_agg"] = fit.rmse_agg;
  j["solver_gap"] = fit.solve.fw_gap;
  j["solver"] = solve_json(fit.solve);
  return j.dump(2) + "\n";
}

std::string mc_report_json(const MCReport& report, const FactorModelSpec& spec) {
  ordered_json j;
  j["schema_version"] = 1;
  ordered_json model;
  model["units"] = spec.n_units;
  model["t0"] = spec.t0;
  model["post"] = spec.n_post;
  model["subperiods"] = spec.subperiods;
  model["rank"] = report.rank;
  model["factor_bound"] = report.factor_bound;
  model["noise_scale"] = report.noise_scale;
  j["model"] = model;
  j["xi_dis"] = report.xi_dis;
  j["xi_agg"] = report.xi_agg;
  j["tighter_by_aggregation"] = report.tighter_by_aggregation;

  ordered_json bounds;
  bounds["delta"] = report.delta;
  bounds["c_bound"] = report.c_bound;
  bounds["tilde_sigma"] = report.tilde_sigma;
  bounds["guarantee_probability"] = report.guarantee_probability;
  bounds["vacuous"] = report.vacuous;
  bounds["dis"] = optional_number(report.bound_dis);
  bounds["agg"] = optional_number(report.bound_agg);
  bounds["combined"] = optional_number(report.bound_combined);
  j["bounds"] = bounds;
  j["replications"] = report.replications;
  j["seed"] = report.seed;

  ordered_json estimators = ordered_json::array();
  for (const auto& e : report.estimators) {
    ordered_json x;
    x["name"] = e.name;
    x["objective"] = objective_name(e.spec.effective_nu());
    x["nu"] = e.spec.effective_nu();
    x["mean_bias"] = e.mean_bias;
    x["bias_se"] = e.bias_se;
    x["mean_abs_bias"] = e.mean_abs_bias;
    x["mean_effect_error"] = e.mean_effect_error;
    x["bound"] = optional_number(e.bound);
    x["coverage"] = optional_number(e.coverage);
    x["nonconverged"] = e.nonconverged;
    estimators.push_back(x);
  }
  j["estimators"] = estimators;
  if (report.dis_vs_agg) {
    const auto& c = *report.dis_vs_agg;
    ordered_json cmp;
    cmp["first"] = c.first;
    cmp["second"] = c.second;
    cmp["first_smaller"] = c.first_smaller;
    cmp["second_smaller"] = c.second_smaller;
    cmp["ties"] = c.ties;
    cmp["sign_test_p_value"] = c.p_value;
    j["dis_vs_agg"] = cmp;
  } else {
    j["dis_vs_agg"] = nullptr;
  }
  return j.dump(2) + "\n";
}

}  // namespace scmtagg::cli
