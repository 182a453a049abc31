#include "scmtagg/factor_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "scmtagg/parallel.hpp"

namespace scmtagg {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return std::mt19937_64(seq);
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, what);
}

// Values at or below 1e-12 * scale count as exact zeros.
double smallest_eigenvalue(const Eigen::MatrixXd& second_moment, double scale) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(second_moment, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  if (!(scale > 0.0) || lo <= 1e-12 * scale) return 0.0;
  return lo;
}

Eigen::MatrixXd cell_moment(const Eigen::MatrixXd& pre_factors) {
  return (pre_factors.transpose() * pre_factors) / static_cast<double>(pre_factors.rows());
}

void validate_bound_inputs(const BoundInputs& in) {
  if (!(in.xi > 0.0)) {
    throw Error(ErrorCode::WeakIdentification,
                "xi = " + std::to_string(in.xi) + " is not positive; the bound is undefined");
  }
  require(in.delta > 0.0, "delta must be positive");
  require(in.c_bound >= 1.0, "C must be at least 1");
  require(in.sigma >= 0.0, "sigma must be nonnegative");
  require(in.factor_bound >= 0.0, "M must be nonnegative");
  require(in.n_donors >= 1 && in.t0 >= 1 && in.subperiods >= 1, "counts must be positive");
}

BoundResult finish_bound(const BoundInputs& in, double bracket) {
  BoundResult out;
  out.tilde_sigma = tilde_sigma(in);
  out.bound_value = static_cast<double>(in.rank) * in.factor_bound * in.factor_bound / in.xi *
                    (bracket + out.tilde_sigma / std::sqrt(static_cast<double>(in.t0 * in.subperiods)));
  const double p = raw_guarantee_probability(in);
  out.vacuous = !(p > 0.0);
  out.guarantee_probability = std::clamp(p, 0.0, 1.0);
  return out;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

const char* to_string(FactorPattern p) noexcept {
  switch (p) {
    case FactorPattern::Random: return "random";
    case FactorPattern::Persistent: return "persistent";
    case FactorPattern::Seasonal: return "seasonal";
  }
  return "unknown";
}

double FactorModelSpec::factor_bound() const {
  return factors.size() == 0 ? 0.0 : factors.cwiseAbs().maxCoeff();
}

Eigen::MatrixXd FactorModelSpec::pre_factors() const {
  return factors.topRows(static_cast<Eigen::Index>(t0 * subperiods));
}

FactorModelSpec prepare_model(FactorModelSpec spec) {
  const auto n = static_cast<Eigen::Index>(spec.n_units);
  const auto periods = static_cast<Eigen::Index>(spec.periods());
  const auto k = static_cast<Eigen::Index>(spec.subperiods);
  require(spec.n_units >= 2, "factor model needs at least two units");
  require(spec.t0 >= 1 && spec.n_post >= 1 && spec.subperiods >= 1,
          "factor model needs t0 >= 1, n_post >= 1 and K >= 1");
  require(spec.noise_scale >= 0.0 && std::isfinite(spec.noise_scale), "noise scale must be >= 0");
  require(spec.loadings.rows() == n, "loadings must have one row per unit");
  require(spec.factors.rows() == periods * k, "factors must have one row per (t, k) cell");
  require(spec.factors.cols() == spec.loadings.cols(), "loadings and factors disagree on rank");
  if (spec.unit_effects.size() == 0) spec.unit_effects = Eigen::VectorXd::Zero(n);
  if (spec.time_effects.size() == 0) spec.time_effects = Eigen::MatrixXd::Zero(periods, k);
  if (spec.effects.size() == 0) {
    spec.effects = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(spec.n_post), k);
  }
  require(spec.unit_effects.size() == n, "unit effects must have one entry per unit");
  require(spec.time_effects.rows() == periods && spec.time_effects.cols() == k,
          "time effects must be T x K");
  require(spec.effects.rows() == static_cast<Eigen::Index>(spec.n_post) && spec.effects.cols() == k,
          "treatment effects must be n_post x K");

  if (spec.oracle_weights) {
    const Eigen::VectorXd& w = *spec.oracle_weights;
    require(w.size() == n - 1, "oracle weights must have one entry per donor");
    require(std::abs(w.sum() - 1.0) <= 1e-9, "oracle weights must sum to 1");
    spec.loadings.row(0) = w.transpose() * spec.loadings.bottomRows(n - 1);
  }

  if (spec.loadings.cols() > 0) {
    spec.loadings.rowwise() -= spec.loadings.colwise().mean();
    for (Eigen::Index s = 0; s < k; ++s) {
      Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(spec.factors.cols());
      for (Eigen::Index t = 0; t < periods; ++t) mean += spec.factors.row(t * k + s);
      mean /= static_cast<double>(periods);
      for (Eigen::Index t = 0; t < periods; ++t) spec.factors.row(t * k + s) -= mean;
    }
  }
  spec.time_effects.rowwise() -= spec.time_effects.colwise().mean();
  return spec;
}

std::pair<PanelData, LatentTruth> generate(const FactorModelSpec& raw, std::uint64_t seed) {
  const FactorModelSpec spec = prepare_model(raw);
  const std::size_t n = spec.n_units;
  const std::size_t periods = spec.periods();
  const std::size_t k = spec.subperiods;

  LatentTruth truth{Cube(n, periods, k), Cube(n, periods, k), spec.effects};
  const Eigen::MatrixXd latent = spec.loadings * spec.factors.transpose();  // n x (T K)
  std::mt19937_64 engine = make_engine(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Cube y(n, periods, k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < periods; ++t) {
      for (std::size_t s = 0; s < k; ++s) {
        const double l = latent(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t * k + s));
        const double e = spec.noise_scale > 0.0 ? spec.noise_scale * normal(engine) : 0.0;
        truth.latent(i, t, s) = l;
        truth.noise(i, t, s) = e;
        double v = spec.unit_effects(static_cast<Eigen::Index>(i)) +
                   spec.time_effects(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(s)) + l + e;
        if (i == 0 && t >= spec.t0) {
          v += spec.effects(static_cast<Eigen::Index>(t - spec.t0), static_cast<Eigen::Index>(s));
        }
        y(i, t, s) = v;
      }
    }
  }
  return {PanelData(std::move(y), spec.t0), std::move(truth)};
}

FactorModelSpec build_factor_model(const FactorModelRecipe& recipe, std::uint64_t seed) {
  require(recipe.n_units >= 2, "recipe needs at least two units");
  require(recipe.subperiods >= 1 && recipe.t0 >= 1 && recipe.n_post >= 1, "recipe dimensions must be positive");
  require(recipe.pattern != FactorPattern::Seasonal || recipe.subperiods >= 2,
          "seasonal factors need K >= 2");
  std::mt19937_64 engine = make_engine(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  const auto n = static_cast<Eigen::Index>(recipe.n_units);
  const auto r = static_cast<Eigen::Index>(recipe.rank);
  const auto periods = static_cast<Eigen::Index>(recipe.t0 + recipe.n_post);
  const auto k = static_cast<Eigen::Index>(recipe.subperiods);

  FactorModelSpec spec;
  spec.n_units = recipe.n_units;
  spec.t0 = recipe.t0;
  spec.n_post = recipe.n_post;
  spec.subperiods = recipe.subperiods;
  spec.noise_scale = recipe.noise_scale;

  spec.loadings = Eigen::MatrixXd(n, r);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index f = 0; f < r; ++f) spec.loadings(i, f) = normal(engine);
  }

  spec.factors = Eigen::MatrixXd(periods * k, r);
  for (Eigen::Index f = 0; f < r; ++f) {
    std::vector<double> season(static_cast<std::size_t>(k), 1.0);
    if (recipe.pattern == FactorPattern::Seasonal) {
      double mean = 0.0;
      for (Eigen::Index s = 0; s < k; ++s) {
        const double phase = 2.0 * std::numbers::pi * (static_cast<double>(s) + 0.5) / static_cast<double>(k) +
                             std::numbers::pi * static_cast<double>(f) / static_cast<double>(r);
        season[static_cast<std::size_t>(s)] = std::numbers::sqrt2 * std::cos(phase);
        mean += season[static_cast<std::size_t>(s)];
      }
      mean /= static_cast<double>(k);
      for (double& v : season) v -= mean;
    }
    for (Eigen::Index t = 0; t < periods; ++t) {
      const double level = normal(engine);
      for (Eigen::Index s = 0; s < k; ++s) {
        double v = 0.0;
        switch (recipe.pattern) {
          case FactorPattern::Random: v = normal(engine); break;
          case FactorPattern::Persistent: v = level; break;
          case FactorPattern::Seasonal: v = level * season[static_cast<std::size_t>(s)]; break;
        }
        spec.factors(t * k + s, f) = v;
      }
    }
  }

  spec.unit_effects = Eigen::VectorXd(n);
  for (Eigen::Index i = 0; i < n; ++i) spec.unit_effects(i) = recipe.unit_effect_scale * normal(engine);
  spec.time_effects = Eigen::MatrixXd(periods, k);
  for (Eigen::Index t = 0; t < periods; ++t) {
    for (Eigen::Index s = 0; s < k; ++s) spec.time_effects(t, s) = recipe.time_effect_scale * normal(engine);
  }
  spec.effects = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(recipe.n_post), k, recipe.effect);

  if (recipe.oracle_weights) {
    spec.oracle_weights = recipe.oracle_weights;
  } else {
    const Eigen::Index donors = n - 1;
    const Eigen::Index support =
        recipe.oracle_support == 0 ? donors : std::min<Eigen::Index>(donors, static_cast<Eigen::Index>(recipe.oracle_support));
    std::exponential_distribution<double> expo(1.0);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(donors);
    for (Eigen::Index j = 0; j < support; ++j) w(j) = expo(engine);
    w /= w.sum();
    spec.oracle_weights = w;
  }
  return prepare_model(std::move(spec));
}

double xi_dis(const Eigen::MatrixXd& pre_factors) {
  require(pre_factors.cols() >= 1, "xi needs rank >= 1");
  require(pre_factors.rows() >= 1, "xi needs at least one pre-treatment cell");
  const Eigen::MatrixXd moment = cell_moment(pre_factors);
  return smallest_eigenvalue(moment, moment.diagonal().maxCoeff());
}

double xi_agg(const Eigen::MatrixXd& pre_factors, std::size_t subperiods) {
  require(pre_factors.cols() >= 1, "xi needs rank >= 1");
  require(subperiods >= 1 && pre_factors.rows() >= 1 &&
              pre_factors.rows() % static_cast<Eigen::Index>(subperiods) == 0,
          "pre-period factor rows must be a whole number of periods");
  const auto k = static_cast<Eigen::Index>(subperiods);
  const Eigen::Index periods = pre_factors.rows() / k;
  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(periods, pre_factors.cols());
  for (Eigen::Index t = 0; t < periods; ++t) {
    for (Eigen::Index s = 0; s < k; ++s) means.row(t) += pre_factors.row(t * k + s);
  }
  means /= static_cast<double>(k);
  // Scale by the per-cell moment so that signal removed by averaging reads as 0.
  return smallest_eigenvalue((means.transpose() * means) / static_cast<double>(periods),
                             cell_moment(pre_factors).diagonal().maxCoeff());
}

double tilde_sigma(const BoundInputs& in) {
  require(in.n_donors >= 1, "tilde sigma needs at least one donor");
  const double n0 = static_cast<double>(in.n_donors);
  const double cells = static_cast<double>(in.t0 * in.subperiods);
  return (2.0 * in.c_bound * std::sqrt(std::log(2.0 * n0)) + (1.0 + in.c_bound) * in.delta) *
         (1.0 + 1.0 / std::sqrt(cells)) * in.sigma;
}

double raw_guarantee_probability(const BoundInputs& in) {
  const double d2 = in.delta * in.delta;
  double p = 1.0 - 8.0 * std::exp(-d2 / 2.0);
  if (in.sigma > 0.0) {
    const double cells = static_cast<double>(in.t0 * in.subperiods);
    p -= 4.0 * std::exp(-cells * d2 / (2.0 * in.sigma * in.sigma * (1.0 + in.c_bound * in.c_bound)));
  }
  return p;
}

BoundResult bound_dis(const BoundInputs& in) {
  validate_bound_inputs(in);
  return finish_bound(in, 4.0 * (1.0 + in.c_bound) * in.sigma + 2.0 * in.delta);
}

BoundResult bound_agg(const BoundInputs& in) {
  validate_bound_inputs(in);
  const double k = static_cast<double>(in.subperiods);
  return finish_bound(in, 4.0 * (1.0 + in.c_bound) * in.sigma / std::sqrt(k) + 2.0 * in.delta);
}

BoundResult bound_combined(const BoundInputs& dis, const BoundInputs& agg) {
  if (dis.rank != agg.rank || dis.factor_bound != agg.factor_bound || dis.sigma != agg.sigma ||
      dis.c_bound != agg.c_bound || dis.delta != agg.delta || dis.t0 != agg.t0 ||
      dis.subperiods != agg.subperiods || dis.n_donors != agg.n_donors) {
    throw Error(ErrorCode::InvalidArgument, "combined bound needs matching shared parameters");
  }
  const BoundResult a = bound_dis(dis);
  const BoundResult b = bound_agg(agg);
  return a.bound_value <= b.bound_value ? a : b;
}

bool tighter_by_aggregation(double xi_dis_value, double xi_agg_value, std::size_t subperiods) {
  return std::sqrt(static_cast<double>(subperiods)) * xi_agg_value > xi_dis_value;
}

double delta_for_probability(double target, std::size_t t0, std::size_t subperiods, double sigma,
                             double c_bound) {
  require(target > 0.0 && target < 1.0, "target probability must lie in (0, 1)");
  BoundInputs in;
  in.sigma = sigma;
  in.c_bound = c_bound;
  in.t0 = t0;
  in.subperiods = subperiods;
  double lo = 0.0;
  double hi = 1.0;
  in.delta = hi;
  while (raw_guarantee_probability(in) < target) {
    hi *= 2.0;
    in.delta = hi;
    require(hi < 1e6, "target probability is unreachable");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
    in.delta = 0.5 * (lo + hi);
    (raw_guarantee_probability(in) >= target ? hi : lo) = in.delta;
  }
  return hi;
}

double sign_test_p_value(std::size_t wins, std::size_t losses) {
  const std::size_t n = wins + losses;
  if (n == 0) return 1.0;
  const double log_half_n = static_cast<double>(n) * std::log(0.5);
  auto pmf = [&](std::size_t i) {
    return std::exp(std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(i) + 1.0) -
                    std::lgamma(static_cast<double>(n - i) + 1.0) + log_half_n);
  };
  double lower = 0.0;
  for (std::size_t i = 0; i <= wins; ++i) lower += pmf(i);
  double upper = 0.0;
  for (std::size_t i = wins; i <= n; ++i) upper += pmf(i);
  return std::min(1.0, 2.0 * std::min(lower, upper));
}

std::uint64_t replication_seed(std::uint64_t master, std::size_t r) {
  return splitmix64(splitmix64(master) ^ static_cast<std::uint64_t>(r));
}

MCReport monte_carlo(const FactorModelSpec& raw, const std::vector<EstimatorConfig>& estimators,
                     const MonteCarloOptions& options) {
  require(options.replications >= 1, "at least one replication is required");
  require(!estimators.empty(), "at least one estimator is required");
  const FactorModelSpec spec = prepare_model(raw);
  require(spec.oracle_weights.has_value(), "Monte Carlo needs oracle weights in the model");
  require(spec.rank() >= 1, "Monte Carlo bounds need rank >= 1");
  const FeasibleSet set(options.c_bound, spec.n_units - 1);
  require(Weights::make(*spec.oracle_weights, options.c_bound).feasibility_slack <= 1e-9,
          "oracle weights must lie in the weight set");

  MCReport report;
  report.rank = spec.rank();
  report.factor_bound = spec.factor_bound();
  const Eigen::MatrixXd pre = spec.pre_factors();
  report.xi_dis = xi_dis(pre);
  report.xi_agg = xi_agg(pre, spec.subperiods);
  report.tighter_by_aggregation = tighter_by_aggregation(report.xi_dis, report.xi_agg, spec.subperiods);
  report.noise_scale = spec.noise_scale;
  report.delta = options.delta;
  report.c_bound = options.c_bound;
  report.replications = options.replications;
  report.seed = options.seed;

  BoundInputs base{spec.rank(), report.factor_bound, 1.0, spec.noise_scale, options.c_bound,
                   options.delta, spec.t0, spec.subperiods, spec.n_units - 1};
  validate_bound_inputs(base);
  report.tilde_sigma = tilde_sigma(base);
  const double p = raw_guarantee_probability(base);
  report.guarantee_probability = std::clamp(p, 0.0, 1.0);
  report.vacuous = !(p > 0.0);
  if (report.xi_dis > 0.0) {
    BoundInputs in = base;
    in.xi = report.xi_dis;
    report.bound_dis = bound_dis(in).bound_value;
  }
  if (report.xi_agg > 0.0) {
    BoundInputs in = base;
    in.xi = report.xi_agg;
    report.bound_agg = bound_agg(in).bound_value;
  }
  if (report.bound_dis && report.bound_agg) {
    report.bound_combined = std::min(*report.bound_dis, *report.bound_agg);
  } else if (report.bound_dis) {
    report.bound_combined = report.bound_dis;
  } else {
    report.bound_combined = report.bound_agg;
  }

  struct Cell {
    double mean_bias = 0.0;
    double mean_abs_bias = 0.0;
    double max_abs_bias = 0.0;
    double effect_error = 0.0;
    bool converged = true;
  };
  const std::size_t e_count = estimators.size();
  std::vector<Cell> cells(options.replications * e_count);
  parallel_for(
      options.replications,
      [&](std::size_t rep) {
        const auto [panel, truth] = generate(spec, replication_seed(options.seed, rep));
        for (std::size_t e = 0; e < e_count; ++e) {
          const FitResult f = fit(panel, estimators[e].spec, set, options.solver);
          const std::vector<EffectEstimate> effects = impute(f, panel);
          Cell c;
          c.converged = f.solve.converged;
          CompensatedSum bias_sum, abs_sum, err_sum;
          std::size_t idx = 0;
          for (std::size_t t = spec.t0; t < spec.periods(); ++t) {
            for (std::size_t s = 0; s < spec.subperiods; ++s, ++idx) {
              CompensatedSum synthetic;
              for (std::size_t j = 0; j + 1 < spec.n_units; ++j) {
                synthetic.add(f.weights.gamma(static_cast<Eigen::Index>(j)) * truth.latent(j + 1, t, s));
              }
              const double bias = truth.latent(0, t, s) - synthetic.value();
              bias_sum.add(bias);
              abs_sum.add(std::abs(bias));
              c.max_abs_bias = std::max(c.max_abs_bias, std::abs(bias));
              err_sum.add(effects[idx].effect -
                          truth.effects(static_cast<Eigen::Index>(t - spec.t0), static_cast<Eigen::Index>(s)));
            }
          }
          const double n_cells = static_cast<double>(idx);
          c.mean_bias = bias_sum.value() / n_cells;
          c.mean_abs_bias = abs_sum.value() / n_cells;
          c.effect_error = err_sum.value() / n_cells;
          cells[rep * e_count + e] = c;
        }
      },
      options.threads);

  const double reps = static_cast<double>(options.replications);
  for (std::size_t e = 0; e < e_count; ++e) {
    EstimatorSummary sum;
    sum.name = estimators[e].name;
    sum.spec = estimators[e].spec;
    const double nu = estimators[e].spec.effective_nu();
    sum.bound = nu == 0.0 ? report.bound_dis : nu == 1.0 ? report.bound_agg : report.bound_combined;
    CompensatedSum bias, abs_bias, err;
    std::size_t covered = 0;
    for (std::size_t rep = 0; rep < options.replications; ++rep) {
      const Cell& c = cells[rep * e_count + e];
      bias.add(c.mean_bias);
      abs_bias.add(c.mean_abs_bias);
      err.add(c.effect_error);
      sum.abs_bias.push_back(c.mean_abs_bias);
      sum.max_abs_bias.push_back(c.max_abs_bias);
      if (!c.converged) ++sum.nonconverged;
      if (sum.bound && c.max_abs_bias <= *sum.bound) ++covered;
    }
    sum.mean_bias = bias.value() / reps;
    sum.mean_abs_bias = abs_bias.value() / reps;
    sum.mean_effect_error = err.value() / reps;
    if (options.replications > 1) {
      CompensatedSum sq;
      for (std::size_t rep = 0; rep < options.replications; ++rep) {
        const double d = cells[rep * e_count + e].mean_bias - sum.mean_bias;
        sq.add(d * d);
      }
      sum.bias_se = std::sqrt(sq.value() / (reps - 1.0) / reps);
    }
    if (sum.bound) sum.coverage = static_cast<double>(covered) / reps;
    report.estimators.push_back(std::move(sum));
  }

  const EstimatorSummary* dis = nullptr;
  const EstimatorSummary* agg = nullptr;
  for (const auto& s : report.estimators) {
    if (!dis && s.spec.effective_nu() == 0.0) dis = &s;
    if (!agg && s.spec.effective_nu() == 1.0) agg = &s;
  }
  if (dis && agg) {
    PairedComparison cmp{dis->name, agg->name};
    for (std::size_t rep = 0; rep < options.replications; ++rep) {
      const double a = dis->abs_bias[rep];
      const double b = agg->abs_bias[rep];
      if (a < b) {
        ++cmp.first_smaller;
      } else if (b < a) {
        ++cmp.second_smaller;
      } else {
        ++cmp.ties;
      }
    }
    cmp.p_value = sign_test_p_value(cmp.first_smaller, cmp.second_smaller);
    report.dis_vs_agg = cmp;
  }
  return report;
}

}  // namespace scmtagg
