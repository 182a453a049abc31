#include <cmath>
#include <random>

#include "doctest.h"
#include "scmtagg/objectives.hpp"
#include "support.hpp"

using namespace scmtagg;

namespace {

// Two-unit de-meaned panel with one pre period per row of `treated`.
DemeanedPanel two_units(const std::vector<double>& treated, const std::vector<double>& donor, std::size_t t0,
                        std::size_t k) {
  DemeanedPanel d;
  d.t0 = t0;
  d.demeaned = Cube(2, t0 + 1, k);
  for (std::size_t t = 0; t < t0; ++t)
    for (std::size_t s = 0; s < k; ++s) {
      d.demeaned(0, t, s) = treated[t * k + s];
      d.demeaned(1, t, s) = donor[t * k + s];
    }
  d.pre_means = {0.0, 0.0};
  return d;
}

Eigen::VectorXd one() { return Eigen::VectorXd::Ones(1); }

// Straight loop, no compensation: independent of the library's evaluation.
double naive_q_dis(const DemeanedPanel& d, const Eigen::VectorXd& g) {
  const std::size_t k = d.demeaned.subperiods();
  double s = 0.0;
  for (std::size_t t = 0; t < d.t0; ++t)
    for (std::size_t j = 0; j < k; ++j) {
      double gap = d.demeaned(0, t, j);
      for (Eigen::Index i = 0; i < g.size(); ++i) gap -= g(i) * d.demeaned(static_cast<std::size_t>(i) + 1, t, j);
      s += gap * gap;
    }
  return s / static_cast<double>(d.t0 * k);
}

double naive_q_agg(const DemeanedPanel& d, const Eigen::VectorXd& g) {
  const std::size_t k = d.demeaned.subperiods();
  double s = 0.0;
  for (std::size_t t = 0; t < d.t0; ++t) {
    double gap = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      gap += d.demeaned(0, t, j);
      for (Eigen::Index i = 0; i < g.size(); ++i) gap -= g(i) * d.demeaned(static_cast<std::size_t>(i) + 1, t, j);
    }
    gap /= static_cast<double>(k);
    s += gap * gap;
  }
  return s / static_cast<double>(d.t0);
}

}  // namespace

TEST_CASE("q_dis examples") {
  CHECK(q_dis(two_units({1, -1}, {0, 0}, 2, 1), one()) == doctest::Approx(1.0));
  CHECK(q_dis(two_units({1, -2, 1}, {1, -2, 1}, 3, 1), one()) == 0.0);
  CHECK(q_dis(two_units({1, 3}, {2, 2}, 1, 2), one()) == doctest::Approx(1.0));
}

TEST_CASE("q_agg examples") {
  const DemeanedPanel jensen = two_units({1, 3}, {2, 2}, 1, 2);
  CHECK(q_agg(jensen, one()) == 0.0);
  CHECK(q_agg(two_units({1, -2, 1, 4}, {1, -2, 1, 4}, 2, 2), one()) == 0.0);
  std::mt19937_64 rng(1);
  const DemeanedPanel k1 = demean(testing::random_panel(rng, 4, 6, 1, 1));
  const Eigen::VectorXd g = testing::random_feasible(rng, 3, 2.0);
  CHECK(q_agg(k1, g) == doctest::Approx(q_dis(k1, g)).epsilon(1e-14));
}

TEST_CASE("q_combined endpoints and midpoint") {
  const DemeanedPanel jensen = two_units({1, 3}, {2, 2}, 1, 2);
  CHECK(q_combined(jensen, one(), 0.5) == doctest::Approx(0.5));
  std::mt19937_64 rng(8);
  const DemeanedPanel d = demean(testing::random_panel(rng, 5, 4, 1, 3));
  const Eigen::VectorXd g = testing::random_feasible(rng, 4, 1.5);
  CHECK(q_combined(d, g, 0.0) == q_dis(d, g));
  CHECK(q_combined(d, g, 1.0) == q_agg(d, g));
  CHECK_THROWS_AS(q_combined(d, g, 1.5), Error);
  CHECK_THROWS_AS(q_combined(d, g, -0.1), Error);
  CHECK_THROWS_AS(ObjectiveSpec::combined(std::nan("")), Error);
}

TEST_CASE("objectives reject a wrong weight length") {
  const DemeanedPanel d = two_units({1, 3}, {2, 2}, 1, 2);
  CHECK_THROWS_AS(q_dis(d, Eigen::VectorXd::Ones(2)), Error);
  CHECK_THROWS_AS(q_agg(d, Eigen::VectorXd::Ones(2)), Error);
}

TEST_CASE("direct evaluation matches a naive loop") {
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = testing::pick(rng, 2, 6);
    const DemeanedPanel d =
        demean(testing::random_panel(rng, n, testing::pick(rng, 1, 6), 1, testing::pick(rng, 1, 5)));
    const Eigen::VectorXd g = testing::random_feasible(rng, n - 1, testing::uniform(rng, 1.0, 3.0));
    CHECK(q_dis(d, g) == doctest::Approx(naive_q_dis(d, g)).epsilon(1e-12));
    CHECK(q_agg(d, g) == doctest::Approx(naive_q_agg(d, g)).epsilon(1e-12));
  }
}

TEST_CASE("quadratic form agrees with direct evaluation") {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = testing::pick(rng, 2, 8);
    const DemeanedPanel d =
        demean(testing::random_panel(rng, n, testing::pick(rng, 1, 8), 2, testing::pick(rng, 1, 6)));
    const double nu = testing::uniform(rng);
    for (const ObjectiveSpec spec :
         {ObjectiveSpec::disaggregated(), ObjectiveSpec::aggregated(), ObjectiveSpec::combined(nu)}) {
      const QuadraticForm q = to_quadratic(d, spec);
      CHECK((q.hessian - q.hessian.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
      for (int p = 0; p < 5; ++p) {
        const Eigen::VectorXd g = testing::random_feasible(rng, n - 1, testing::uniform(rng, 1.0, 3.0));
        const double direct = evaluate(d, spec, g);
        CHECK(std::abs(q.value(g) - direct) <= 1e-10 * (1.0 + std::abs(direct)));
      }
    }
  }
}

TEST_CASE("zero panel gives a zero quadratic form") {
  const PanelData p(Cube(4, 3, 2), 2);
  const QuadraticForm q = to_quadratic(demean(p), ObjectiveSpec::combined(0.3));
  CHECK(q.hessian.isZero(0.0));
  CHECK(q.linear.isZero(0.0));
  CHECK(q.constant == 0.0);
}

TEST_CASE("gradient matches central differences of the direct objective") {
  std::mt19937_64 rng(9);
  const double h = 1e-5;
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n = testing::pick(rng, 2, 6);
    const DemeanedPanel d = demean(testing::random_panel(rng, n, testing::pick(rng, 2, 6), 1, 4));
    const ObjectiveSpec spec = ObjectiveSpec::combined(testing::uniform(rng));
    const QuadraticForm q = to_quadratic(d, spec);
    const Eigen::VectorXd g = testing::random_feasible(rng, n - 1, 2.0);
    const Eigen::VectorXd grad = q.gradient(g);
    Eigen::VectorXd fd(g.size());
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      Eigen::VectorXd up = g, down = g;
      up(i) += h;
      down(i) -= h;
      fd(i) = (evaluate(d, spec, up) - evaluate(d, spec, down)) / (2.0 * h);
    }
    CHECK((grad - fd).cwiseAbs().maxCoeff() <= 1e-5 * std::max(1.0, fd.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("Jensen ordering and convexity on random inputs") {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = testing::pick(rng, 2, 6);
    const DemeanedPanel d =
        demean(testing::random_panel(rng, n, testing::pick(rng, 1, 6), 1, testing::pick(rng, 1, 6)));
    const double c = testing::uniform(rng, 1.0, 3.0);
    const Eigen::VectorXd a = testing::random_feasible(rng, n - 1, c);
    const Eigen::VectorXd b = testing::random_feasible(rng, n - 1, c);
    CHECK(q_agg(d, a) <= q_dis(d, a) + 1e-12);
    const double lambda = testing::uniform(rng);
    const Eigen::VectorXd mid = lambda * a + (1.0 - lambda) * b;
    for (double nu : {0.0, 0.5, 1.0}) {
      CHECK(q_combined(d, mid, nu) <= lambda * q_combined(d, a, nu) + (1.0 - lambda) * q_combined(d, b, nu) + 1e-10);
    }
  }
}

TEST_CASE("objectives ignore unit intercepts") {
  std::mt19937_64 rng(13);
  const PanelData p = testing::random_panel(rng, 5, 4, 1, 3);
  Cube shifted = p.outcomes();
  for (std::size_t i = 0; i < 5; ++i)
    for (double& v : shifted.unit(i)) v += 10.0 * static_cast<double>(i) - 7.0;
  const DemeanedPanel a = demean(p);
  const DemeanedPanel b = demean(PanelData(shifted, 4));
  const Eigen::VectorXd g = testing::random_feasible(rng, 4, 1.0);
  CHECK(q_dis(a, g) == doctest::Approx(q_dis(b, g)).epsilon(1e-10));
  CHECK(q_agg(a, g) == doctest::Approx(q_agg(b, g)).epsilon(1e-10));
}
