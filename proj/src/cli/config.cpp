#include <fstream>
#include <set>

#include "json.hpp"
#include "scmtagg/cli.hpp"

namespace scmtagg::cli {

using nlohmann::json;

namespace {

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorCode::ParseError, where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (!known.contains(key)) throw Error(ErrorCode::ParseError, where + ": unknown key '" + key + "'");
  }
}

template <typename T>
T get(const json& obj, const char* key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, where + ": bad value for '" + key + "': " + e.what());
  }
}

Eigen::MatrixXd matrix_from(const json& rows, const std::string& what) {
  if (!rows.is_array()) throw Error(ErrorCode::ParseError, what + " must be an array of rows");
  const auto n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index m = n == 0 ? 0 : static_cast<Eigen::Index>(rows.front().size());
  Eigen::MatrixXd out(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    const json& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != m) {
      throw Error(ErrorCode::ParseError, what + " rows must be arrays of equal length");
    }
    for (Eigen::Index j = 0; j < m; ++j) out(i, j) = row[static_cast<std::size_t>(j)].get<double>();
  }
  return out;
}

Eigen::VectorXd vector_from(const json& values, const std::string& what) {
  if (!values.is_array()) throw Error(ErrorCode::ParseError, what + " must be an array");
  Eigen::VectorXd out(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) out(static_cast<Eigen::Index>(i)) = values[i].get<double>();
  return out;
}

FactorPattern parse_pattern(const std::string& name) {
  if (name == "random") return FactorPattern::Random;
  if (name == "persistent") return FactorPattern::Persistent;
  if (name == "seasonal") return FactorPattern::Seasonal;
  throw Error(ErrorCode::ParseError, "unknown factor pattern '" + name + "'");
}

FactorModelSpec parse_model(const json& m, std::uint64_t default_seed) {
  const std::string where = "model";
  reject_unknown(m,
                 {"units", "t0", "post", "subperiods", "rank", "pattern", "noise_scale", "effect",
                  "unit_effect_scale", "time_effect_scale", "oracle_support", "oracle_weights",
                  "model_seed", "loadings", "factors", "unit_effects", "time_effects", "effects"},
                 where);
  const bool explicit_arrays = m.contains("loadings") || m.contains("factors");
  if (explicit_arrays) {
    if (!m.contains("loadings") || !m.contains("factors")) {
      throw Error(ErrorCode::ParseError, "model: 'loadings' and 'factors' must be given together");
    }
    FactorModelSpec spec;
    spec.n_units = get<std::size_t>(m, "units", where);
    spec.t0 = get<std::size_t>(m, "t0", where);
    spec.n_post = m.value("post", std::size_t{1});
    spec.subperiods = get<std::size_t>(m, "subperiods", where);
    spec.noise_scale = m.value("noise_scale", 0.0);
    spec.loadings = matrix_from(m.at("loadings"), "loadings");
    spec.factors = matrix_from(m.at("factors"), "factors");
    if (m.contains("unit_effects")) spec.unit_effects = vector_from(m.at("unit_effects"), "unit_effects");
    if (m.contains("time_effects")) spec.time_effects = matrix_from(m.at("time_effects"), "time_effects");
    if (m.contains("effects")) {
      spec.effects = matrix_from(m.at("effects"), "effects");
    } else if (m.contains("effect")) {
      spec.effects = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(spec.n_post),
                                               static_cast<Eigen::Index>(spec.subperiods),
                                               m.at("effect").get<double>());
    }
    if (m.contains("oracle_weights")) spec.oracle_weights = vector_from(m.at("oracle_weights"), "oracle_weights");
    return prepare_model(std::move(spec));
  }

  FactorModelRecipe recipe;
  recipe.n_units = m.value("units", recipe.n_units);
  recipe.t0 = m.value("t0", recipe.t0);
  recipe.n_post = m.value("post", recipe.n_post);
  recipe.subperiods = m.value("subperiods", recipe.subperiods);
  recipe.rank = m.value("rank", recipe.rank);
  recipe.pattern = parse_pattern(m.value("pattern", std::string("random")));
  recipe.noise_scale = m.value("noise_scale", recipe.noise_scale);
  recipe.effect = m.value("effect", recipe.effect);
  recipe.unit_effect_scale = m.value("unit_effect_scale", recipe.unit_effect_scale);
  recipe.time_effect_scale = m.value("time_effect_scale", recipe.time_effect_scale);
  recipe.oracle_support = m.value("oracle_support", recipe.oracle_support);
  if (m.contains("oracle_weights")) recipe.oracle_weights = vector_from(m.at("oracle_weights"), "oracle_weights");
  return build_factor_model(recipe, m.value("model_seed", default_seed));
}

}  // namespace

bool RunConfig::wants(const std::string& format) const {
  return std::find(formats.begin(), formats.end(), format) != formats.end();
}

SolverOptions RunConfig::solver() const {
  SolverOptions opts;
  opts.tol = tol;
  opts.max_iter = max_iter;
  return opts;
}

ObjectiveKind parse_objective_kind(const std::string& name) {
  if (name == "disaggregated" || name == "dis") return ObjectiveKind::Disaggregated;
  if (name == "aggregated" || name == "agg") return ObjectiveKind::Aggregated;
  if (name == "combined" || name == "com") return ObjectiveKind::Combined;
  throw Error(ErrorCode::InvalidArgument, "unknown objective '" + name + "'");
}

RunConfig load_config(const std::filesystem::path& path) {
  const json j = read_json(path);
  const std::string where = path.string();
  reject_unknown(j,
                 {"input", "t0", "treated_unit", "c_bound", "objective", "nu", "nu_grid", "nu_points",
                  "tol", "max_iter", "seed", "out", "formats", "threads"},
                 where);
  RunConfig c;
  try {
    if (j.contains("input")) c.input = j.at("input").get<std::string>();
    if (j.contains("t0")) c.t0 = j.at("t0").get<std::size_t>();
    if (j.contains("treated_unit")) c.treated_unit = j.at("treated_unit").get<std::string>();
    if (j.contains("c_bound")) c.c_bound = j.at("c_bound").get<double>();
    const double nu = j.value("nu", 0.5);
    const ObjectiveKind kind = parse_objective_kind(j.value("objective", std::string("combined")));
    c.objective = kind == ObjectiveKind::Combined ? ObjectiveSpec::combined(nu)
                  : kind == ObjectiveKind::Disaggregated ? ObjectiveSpec::disaggregated()
                                                         : ObjectiveSpec::aggregated();
    if (j.contains("nu_grid")) c.nu_grid = j.at("nu_grid").get<std::vector<double>>();
    if (j.contains("nu_points")) c.nu_grid = default_nu_grid(j.at("nu_points").get<std::size_t>());
    if (j.contains("tol")) c.tol = j.at("tol").get<double>();
    c.max_iter = j.value("max_iter", c.max_iter);
    c.seed = j.value("seed", c.seed);
    if (j.contains("out")) c.out = j.at("out").get<std::string>();
    if (j.contains("formats")) c.formats = j.at("formats").get<std::vector<std::string>>();
    c.threads = j.value("threads", c.threads);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, where + ": " + e.what());
  }
  return c;
}

SimulationSpec load_simulation_spec(const std::filesystem::path& path, std::uint64_t default_seed) {
  const json j = read_json(path);
  const std::string where = path.string();
  reject_unknown(j, {"model", "estimators", "replications", "delta", "target_probability", "c_bound"},
                 where);
  SimulationSpec sim;
  try {
    if (!j.contains("model")) throw Error(ErrorCode::ParseError, where + ": missing 'model'");
    sim.model = parse_model(j.at("model"), default_seed);
    sim.replications = j.value("replications", sim.replications);
    if (j.contains("delta")) sim.delta = j.at("delta").get<double>();
    sim.target_probability = j.value("target_probability", sim.target_probability);
    if (j.contains("c_bound")) sim.c_bound = j.at("c_bound").get<double>();
    if (j.contains("estimators")) {
      for (const json& e : j.at("estimators")) {
        reject_unknown(e, {"name", "objective", "nu"}, where + ": estimator");
        const ObjectiveKind kind = parse_objective_kind(get<std::string>(e, "objective", where));
        const ObjectiveSpec spec = kind == ObjectiveKind::Combined ? ObjectiveSpec::combined(e.value("nu", 0.5))
                                   : kind == ObjectiveKind::Disaggregated ? ObjectiveSpec::disaggregated()
                                                                          : ObjectiveSpec::aggregated();
        sim.estimators.push_back({e.value("name", std::string(to_string(kind))), spec});
      }
    } else {
      sim.estimators = {{"disaggregated", ObjectiveSpec::disaggregated()},
                        {"aggregated", ObjectiveSpec::aggregated()},
                        {"combined", ObjectiveSpec::combined(0.5)}};
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, where + ": " + e.what());
  }
  return sim;
}

}  // namespace scmtagg::cli
