#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "scmtagg/cli.hpp"

namespace scmtagg::cli {

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

void prepare_out_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
}

PanelData load_panel(const RunConfig& config) {
  if (config.input.empty()) throw Error(ErrorCode::InvalidArgument, "no input file given (--input)");
  if (!config.t0) throw Error(ErrorCode::InvalidArgument, "number of pre-treatment periods not given (--t0)");
  return ingest_csv(config.input, *config.t0, config.treated_unit);
}

int exit_code_for(const Error& e) {
  return e.code() == ErrorCode::Io ? kIoError : kInputError;
}

}  // namespace

int cmd_fit(const RunConfig& config) {
  const PanelData panel = load_panel(config);
  const FeasibleSet set(config.c(), panel.n_donors());
  const FitResult result = fit(panel, config.objective, set, config.solver());
  const std::vector<EffectEstimate> effects = impute(result, panel);

  prepare_out_dir(config.out);
  if (config.wants("json")) write_text(config.out / "fit.json", fit_json(result, panel, set.c_bound));
  if (config.wants("csv")) write_effects_csv(config.out / "effects.csv", effects);

  std::cout << "nu=" << format_number(result.nu) << " rmse_dis=" << format_number(result.rmse_dis)
            << " rmse_agg=" << format_number(result.rmse_agg) << " gap=" << format_number(result.solve.fw_gap)
            << " iterations=" << result.solve.iterations << '\n';
  if (!result.solve.converged) {
    std::cerr << "solver did not reach tolerance " << format_number(result.solve.tolerance) << '\n';
    return kNotConverged;
  }
  return kSuccess;
}

int cmd_frontier(const RunConfig& config) {
  const PanelData panel = load_panel(config);
  const FeasibleSet set(config.c(), panel.n_donors());
  const std::vector<FrontierPoint> points = frontier(panel, config.nu_grid, set, config.solver());

  prepare_out_dir(config.out);
  if (config.wants("csv")) write_frontier_csv(config.out / "frontier.csv", points);
  if (config.wants("svg")) write_text(config.out / "frontier.svg", frontier_svg(points));

  bool converged = true;
  for (const auto& p : points) {
    std::cout << "nu=" << format_number(p.nu) << " rmse_dis=" << format_number(p.rmse_dis)
              << " rmse_agg=" << format_number(p.rmse_agg) << '\n';
    converged = converged && p.solve.converged;
  }
  if (!converged) {
    std::cerr << "solver did not converge for every nu\n";
    return kNotConverged;
  }
  return kSuccess;
}

int cmd_simulate(const RunConfig& config) {
  if (config.input.empty()) throw Error(ErrorCode::InvalidArgument, "no simulation spec given (--input)");
  const SimulationSpec sim = load_simulation_spec(config.input, config.seed);
  MonteCarloOptions options;
  options.replications = sim.replications;
  options.seed = config.seed;
  options.c_bound = config.c_bound.value_or(sim.c_bound.value_or(1.0));
  options.delta = sim.delta.value_or(delta_for_probability(
      sim.target_probability, sim.model.t0, sim.model.subperiods, sim.model.noise_scale, options.c_bound));
  options.solver = config.solver();
  options.threads = config.threads;
  const MCReport report = monte_carlo(sim.model, sim.estimators, options);

  prepare_out_dir(config.out);
  write_text(config.out / "mc_report.json", mc_report_json(report, sim.model));

  std::cout << "xi_dis=" << format_number(report.xi_dis) << " xi_agg=" << format_number(report.xi_agg)
            << " tighter_by_aggregation=" << (report.tighter_by_aggregation ? "true" : "false") << '\n';
  for (const auto& e : report.estimators) {
    std::cout << e.name << ": mean_abs_bias=" << format_number(e.mean_abs_bias)
              << " coverage=" << (e.coverage ? format_number(*e.coverage) : std::string("n/a")) << '\n';
  }
  return kSuccess;
}

int cmd_placebo(const RunConfig& config) {
  const PanelData panel = load_panel(config);
  const FeasibleSet set(config.c(), panel.n_donors());
  const std::vector<PlaceboSeries> placebos = placebo_in_space(panel, config.objective, set, config.solver());

  prepare_out_dir(config.out);
  write_placebo_csv(config.out / "placebo.csv", placebos);
  for (const auto& p : placebos) {
    std::cout << p.unit << ": rmse_dis=" << format_number(p.rmse_dis) << " rmse_agg=" << format_number(p.rmse_agg)
              << '\n';
  }
  return kSuccess;
}

int run(int argc, char** argv) {
  CLI::App app{"Synthetic control weights balancing disaggregated and aggregated pre-treatment outcomes"};
  app.name("scmtagg");
  app.require_subcommand(1, 1);

  struct Flags {
    std::string input;
    std::string config;
    std::size_t t0 = 0;
    double c_bound = 1.0;
    double nu = 0.5;
    std::uint64_t seed = 1;
    std::string out;
    std::string objective;
    std::string treated;
    double tol = 0.0;
    std::size_t max_iter = 0;
    std::size_t nu_points = 0;
    std::size_t threads = 0;
  } flags;

  struct Registered {
    CLI::App* sub;
    CLI::Option* t0;
    CLI::Option* c_bound;
    CLI::Option* nu;
    CLI::Option* seed;
    CLI::Option* out;
    CLI::Option* objective;
    CLI::Option* treated;
    CLI::Option* tol;
    CLI::Option* max_iter;
    CLI::Option* nu_points;
    CLI::Option* threads;
    CLI::Option* input;
    CLI::Option* config;
  };
  std::vector<Registered> subs;
  auto add = [&](const char* name, const char* help) {
    CLI::App* sub = app.add_subcommand(name, help);
    Registered r{};
    r.sub = sub;
    r.input = sub->add_option("--input", flags.input, "Input CSV (simulate: simulation spec JSON)");
    r.config = sub->add_option("--config", flags.config, "JSON config file; flags override its values");
    r.t0 = sub->add_option("--t0", flags.t0, "Number of pre-treatment periods");
    r.c_bound = sub->add_option("--c-bound", flags.c_bound, "L1 bound C on the weights (C >= 1)");
    r.nu = sub->add_option("--nu", flags.nu, "Weight on the aggregated objective, in [0, 1]");
    r.seed = sub->add_option("--seed", flags.seed, "Random seed");
    r.out = sub->add_option("--out", flags.out, "Output directory");
    r.objective = sub->add_option("--objective", flags.objective, "disaggregated | aggregated | combined");
    r.treated = sub->add_option("--treated", flags.treated, "Label of the treated unit (overrides the column)");
    r.tol = sub->add_option("--tol", flags.tol, "Absolute Frank-Wolfe gap tolerance");
    r.max_iter = sub->add_option("--max-iter", flags.max_iter, "Solver iteration cap");
    r.nu_points = sub->add_option("--nu-points", flags.nu_points, "Size of the equally spaced nu grid");
    r.threads = sub->add_option("--threads", flags.threads, "Worker threads (0 = all cores)");
    subs.push_back(r);
  };
  add("fit", "Fit weights and write fit.json and effects.csv");
  add("frontier", "Sweep nu and write frontier.csv and frontier.svg");
  add("simulate", "Run a factor-model Monte Carlo and write mc_report.json");
  add("placebo", "Refit with each donor as pseudo-treated and write placebo.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kSuccess : kInputError;
  }

  try {
    const Registered* active = nullptr;
    for (const auto& r : subs) {
      if (r.sub->parsed()) active = &r;
    }
    RunConfig config = active->config->count() ? load_config(flags.config) : RunConfig{};
    if (active->input->count()) config.input = flags.input;
    if (active->t0->count()) config.t0 = flags.t0;
    if (active->c_bound->count()) config.c_bound = flags.c_bound;
    if (active->treated->count()) config.treated_unit = flags.treated;
    if (active->objective->count()) {
      const ObjectiveKind kind = parse_objective_kind(flags.objective);
      config.objective = kind == ObjectiveKind::Combined    ? ObjectiveSpec::combined(config.objective.nu)
                         : kind == ObjectiveKind::Aggregated ? ObjectiveSpec::aggregated()
                                                             : ObjectiveSpec::disaggregated();
    }
    if (active->nu->count()) config.objective = ObjectiveSpec::combined(flags.nu);
    if (active->seed->count()) config.seed = flags.seed;
    if (active->out->count()) config.out = flags.out;
    if (active->tol->count()) config.tol = flags.tol;
    if (active->max_iter->count()) config.max_iter = flags.max_iter;
    if (active->nu_points->count()) config.nu_grid = default_nu_grid(flags.nu_points);
    if (active->threads->count()) config.threads = flags.threads;

    const std::string name = active->sub->get_name();
    if (name == "fit") return cmd_fit(config);
    if (name == "frontier") return cmd_frontier(config);
    if (name == "simulate") return cmd_simulate(config);
    return cmd_placebo(config);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

}  // namespace scmtagg::cli
