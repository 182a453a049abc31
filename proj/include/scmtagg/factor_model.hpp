#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "scmtagg/estimator.hpp"
#include "scmtagg/objectives.hpp"
#include "scmtagg/panel.hpp"
#include "scmtagg/solver.hpp"

namespace scmtagg {

/// Linear factor model for control outcomes
///   Y_itk(0) = alpha_i + beta_tk + phi_i . mu_tk + eps_itk,
/// plus a treatment effect on the treated unit (index 0) after t0.
///
/// Factor rows are indexed by cell t * K + k over all periods. When
/// `oracle_weights` is set the treated loadings are replaced by the
/// oracle-weighted donor loadings, so those weights balance L exactly.
struct FactorModelSpec {
  std::size_t n_units = 0;
  std::size_t t0 = 0;
  std::size_t n_post = 1;
  std::size_t subperiods = 1;
  Eigen::MatrixXd loadings;      // n_units x r
  Eigen::MatrixXd factors;       // (T * K) x r
  Eigen::VectorXd unit_effects;  // n_units
  Eigen::MatrixXd time_effects;  // T x K
  Eigen::MatrixXd effects;       // n_post x K, added to treated post cells
  double noise_scale = 0.0;
  std::optional<Eigen::VectorXd> oracle_weights;  // length n_units - 1

  std::size_t periods() const noexcept { return t0 + n_post; }
  std::size_t rank() const noexcept { return static_cast<std::size_t>(loadings.cols()); }
  /// M: the largest absolute factor entry.
  double factor_bound() const;
  /// Factor rows for pre-treatment cells.
  Eigen::MatrixXd pre_factors() const;
};

/// Checks dimensions, applies the oracle weights, and centers the model so
/// that sum_i L_itk = 0, sum_t L_itk = 0 and sum_t beta_tk = 0. Loadings are
/// centered across units and factors across periods within each subperiod,
/// which double-centers L = phi mu' exactly and keeps it rank r.
FactorModelSpec prepare_model(FactorModelSpec spec);

struct LatentTruth {
  Cube latent;           // L_itk
  Cube noise;            // eps_itk
  Eigen::MatrixXd effects;  // tau_tk for post periods
};

/// Draws one panel. Noise is i.i.d. N(0, sigma^2); the result depends only on
/// (spec, seed).
std::pair<PanelData, LatentTruth> generate(const FactorModelSpec& spec, std::uint64_t seed);

enum class FactorPattern {
  Random,      // mu_tk i.i.d. standard normal
  Persistent,  // mu_tk = m_t: constant within a period
  Seasonal,    // mu_tk = m_t s_k with sum_k s_k = 0
};

const char* to_string(FactorPattern p) noexcept;

/// Structural description used to draw a FactorModelSpec.
struct FactorModelRecipe {
  std::size_t n_units = 11;
  std::size_t t0 = 10;
  std::size_t n_post = 1;
  std::size_t subperiods = 4;
  std::size_t rank = 1;
  FactorPattern pattern = FactorPattern::Random;
  double noise_scale = 0.1;
  double effect = 0.0;
  double unit_effect_scale = 1.0;
  double time_effect_scale = 1.0;
  /// Oracle weights on the simplex over the first `oracle_support` donors
  /// (0 = every donor), drawn from a flat Dirichlet.
  std::size_t oracle_support = 0;
  std::optional<Eigen::VectorXd> oracle_weights;
};

FactorModelSpec build_factor_model(const FactorModelRecipe& recipe, std::uint64_t seed);

/// Smallest eigenvalue of (1 / (T0 K)) sum_tk mu_tk mu_tk'. Rows of
/// `pre_factors` are pre-treatment cells. Values below 1e-12 times the largest
/// diagonal entry of that matrix are reported as 0.
double xi_dis(const Eigen::MatrixXd& pre_factors);

/// Same for the period means mu_bar_t = (1/K) sum_k mu_tk, with the zero
/// threshold taken from the per-cell moment matrix.
double xi_agg(const Eigen::MatrixXd& pre_factors, std::size_t subperiods);

struct BoundInputs {
  std::size_t rank = 1;
  double factor_bound = 1.0;  // M
  double xi = 1.0;
  double sigma = 0.0;
  double c_bound = 1.0;
  double delta = 1.0;
  std::size_t t0 = 1;
  std::size_t subperiods = 1;
  std::size_t n_donors = 1;
};

struct BoundResult {
  double bound_value = 0.0;
  double tilde_sigma = 0.0;
  double guarantee_probability = 0.0;  // clamped to [0, 1]
  bool vacuous = false;                // raw probability was <= 0
};

double tilde_sigma(const BoundInputs& in);

/// 1 - 8 exp(-delta^2/2) - 4 exp(-T0 K delta^2 / (2 sigma^2 (1 + C^2))),
/// the last term taken as 0 when sigma = 0. Not clamped.
double raw_guarantee_probability(const BoundInputs& in);

BoundResult bound_dis(const BoundInputs& in);
BoundResult bound_agg(const BoundInputs& in);

/// Minimum of the two bounds. Everything but xi must agree.
BoundResult bound_combined(const BoundInputs& dis, const BoundInputs& agg);

/// sqrt(K) xi_agg > xi_dis.
bool tighter_by_aggregation(double xi_dis, double xi_agg, std::size_t subperiods);

/// Smallest delta whose guarantee probability reaches `target` (bisection).
double delta_for_probability(double target, std::size_t t0, std::size_t subperiods, double sigma,
                             double c_bound);

/// Exact two-sided binomial sign test for `wins` successes out of
/// wins + losses fair trials.
double sign_test_p_value(std::size_t wins, std::size_t losses);

struct EstimatorConfig {
  std::string name;
  ObjectiveSpec spec;
};

struct MonteCarloOptions {
  std::size_t replications = 500;
  std::uint64_t seed = 1;
  double delta = 3.0;
  double c_bound = 1.0;
  SolverOptions solver;
  std::size_t threads = 0;
};

struct EstimatorSummary {
  std::string name;
  ObjectiveSpec spec;
  double mean_bias = 0.0;       // signed, averaged over post cells and replications
  double bias_se = 0.0;         // standard error of mean_bias across replications
  double mean_abs_bias = 0.0;   // mean over replications of the cell-averaged |bias|
  double mean_effect_error = 0.0;  // tau_hat - tau, averaged likewise
  std::optional<double> bound;     // bias bound for this estimator
  std::optional<double> coverage;  // share of replications with max_cell |bias| <= bound
  std::size_t nonconverged = 0;
  std::vector<double> abs_bias;      // per replication, cell-averaged |bias|
  std::vector<double> max_abs_bias;  // per replication, max over post cells
};

struct PairedComparison {
  std::string first;
  std::string second;
  std::size_t first_smaller = 0;
  std::size_t second_smaller = 0;
  std::size_t ties = 0;
  double p_value = 1.0;
};

struct MCReport {
  std::size_t rank = 0;
  double factor_bound = 0.0;
  double xi_dis = 0.0;
  double xi_agg = 0.0;
  bool tighter_by_aggregation = false;
  double noise_scale = 0.0;
  double delta = 0.0;
  double c_bound = 1.0;
  double guarantee_probability = 0.0;
  bool vacuous = false;
  double tilde_sigma = 0.0;
  std::optional<double> bound_dis;
  std::optional<double> bound_agg;
  std::optional<double> bound_combined;
  std::size_t replications = 0;
  std::uint64_t seed = 0;
  std::vector<EstimatorSummary> estimators;
  /// Sign test on per-replication |bias| for the first disaggregated and the
  /// first aggregated estimator, when both are present.
  std::optional<PairedComparison> dis_vs_agg;
};

/// Seed of replication `r` derived from the master seed.
std::uint64_t replication_seed(std::uint64_t master, std::size_t r);

/// Bias of an estimator is measured on the latent component,
/// L_1tk - sum_i gamma_i L_itk, over every post-treatment cell.
MCReport monte_carlo(const FactorModelSpec& spec, const std::vector<EstimatorConfig>& estimators,
                     const MonteCarloOptions& options);

}  // namespace scmtagg
