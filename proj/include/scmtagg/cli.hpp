#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "scmtagg/estimator.hpp"
#include "scmtagg/factor_model.hpp"
#include "scmtagg/panel.hpp"

namespace scmtagg::cli {

enum ExitCode : int {
  kSuccess = 0,
  kInputError = 2,
  kNotConverged = 3,
  kIoError = 4,
};

/// Everything a subcommand needs. Loaded from a JSON config file, then
/// overridden by command-line flags.
struct RunConfig {
  std::filesystem::path input;
  std::optional<std::size_t> t0;
  std::optional<std::string> treated_unit;
  /// Unset means 1, or the simulation spec's value for `simulate`.
  std::optional<double> c_bound;
  ObjectiveSpec objective = ObjectiveSpec::combined(0.5);
  std::vector<double> nu_grid = default_nu_grid(21);
  std::optional<double> tol;
  std::size_t max_iter = 100000;
  std::uint64_t seed = 1;
  std::filesystem::path out = ".";
  std::vector<std::string> formats = {"csv", "json", "svg"};
  std::size_t threads = 0;

  double c() const { return c_bound.value_or(1.0); }
  bool wants(const std::string& format) const;
  SolverOptions solver() const;
};

/// Reads a config file. Unknown keys are rejected.
RunConfig load_config(const std::filesystem::path& path);

/// Parses `disaggregated`, `aggregated` or `combined` (plus short forms).
ObjectiveKind parse_objective_kind(const std::string& name);

// ---- CSV -------------------------------------------------------------------

/// Long-format records from `unit,period,subperiod,outcome,treated`.
std::vector<RawObservation> read_csv_records(const std::filesystem::path& path);

/// Reads and validates a panel. When `treated_unit` is given it overrides the
/// treated column.
PanelData ingest_csv(const std::filesystem::path& path, std::size_t t0,
                     const std::optional<std::string>& treated_unit = std::nullopt);

/// Shortest decimal text that round-trips to `x`.
std::string format_number(double x);

void write_effects_csv(const std::filesystem::path& path, const std::vector<EffectEstimate>& effects);
void write_frontier_csv(const std::filesystem::path& path, const std::vector<FrontierPoint>& points);
void write_placebo_csv(const std::filesystem::path& path, const std::vector<PlaceboSeries>& placebos);

// ---- JSON ------------------------------------------------------------------

std::string fit_json(const FitResult& fit, const PanelData& panel, double c_bound);
std::string mc_report_json(const MCReport& report, const FactorModelSpec& spec);

/// Monte Carlo settings read from a simulation spec file.
struct SimulationSpec {
  FactorModelSpec model;
  std::vector<EstimatorConfig> estimators;
  std::size_t replications = 500;
  std::optional<double> delta;
  double target_probability = 0.9;
  std::optional<double> c_bound;
};

/// Parses a simulation spec file. `default_seed` seeds the latent model
/// draw unless the file names its own `model_seed`.
SimulationSpec load_simulation_spec(const std::filesystem::path& path, std::uint64_t default_seed);

// ---- SVG -------------------------------------------------------------------

std::string frontier_svg(const std::vector<FrontierPoint>& points);

// ---- Commands --------------------------------------------------------------

int cmd_fit(const RunConfig& config);
int cmd_frontier(const RunConfig& config);
int cmd_simulate(const RunConfig& config);
int cmd_placebo(const RunConfig& config);

/// Full command-line entry point.
int run(int argc, char** argv);

}  // namespace scmtagg::cli
