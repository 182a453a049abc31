#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "scmtagg/estimator.hpp"
#include "support.hpp"

using namespace scmtagg;

namespace {

// Unit rows of period-major (t, k) values.
PanelData panel_of(const std::vector<std::vector<double>>& rows, std::size_t periods, std::size_t subperiods,
                   std::size_t t0) {
  Cube c(rows.size(), periods, subperiods);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t t = 0; t < periods; ++t)
      for (std::size_t k = 0; k < subperiods; ++k) c(i, t, k) = rows[i][t * subperiods + k];
  return PanelData(c, t0);
}

// Treated unit copies donor `copy` and gains `tau` after t0.
PanelData exact_fit_panel(std::mt19937_64& rng, std::size_t units, std::size_t t0, std::size_t post,
                          std::size_t k, std::size_t copy, double tau) {
  Cube c = testing::random_cube(rng, units, t0 + post, k);
  for (std::size_t t = 0; t < t0 + post; ++t)
    for (std::size_t s = 0; s < k; ++s) c(0, t, s) = c(copy, t, s) + 3.0 + (t >= t0 ? tau : 0.0);
  return PanelData(c, t0);
}

double mean_effect(const std::vector<EffectEstimate>& effects) {
  double s = 0.0;
  for (const auto& e : effects) s += e.effect;
  return s / static_cast<double>(effects.size());
}

}  // namespace

TEST_CASE("exact copy in the donor pool gives a perfect fit") {
  std::mt19937_64 rng(1);
  const PanelData p = exact_fit_panel(rng, 6, 8, 2, 3, 4, 0.0);
  for (const ObjectiveSpec spec :
       {ObjectiveSpec::disaggregated(), ObjectiveSpec::aggregated(), ObjectiveSpec::combined(0.5)}) {
    const FitResult f = fit(p, spec, FeasibleSet(1.0, 5));
    CHECK(f.rmse_dis <= 1e-7);
    CHECK(f.rmse_agg <= 1e-7);
    for (const auto& e : impute(f, p)) CHECK(std::abs(e.effect) <= 1e-9);
  }
}

TEST_CASE("Jensen example separates the two objectives") {
  const PanelData p = panel_of({{1, 3, 0, 0}, {2, 2, 0, 0}, {0, 0, 0, 0}}, 2, 2, 1);
  const FitResult agg = fit(p, ObjectiveSpec::aggregated(), FeasibleSet(1.0, 2));
  CHECK(agg.solve.objective_value <= 1e-12);
  CHECK(agg.rmse_agg <= 1e-6);
  const FitResult dis = fit(p, ObjectiveSpec::disaggregated(), FeasibleSet(1.0, 2));
  CHECK(dis.rmse_dis > 0.5);
  CHECK(dis.rmse_agg <= dis.rmse_dis + 1e-12);
}

TEST_CASE("fit checks the weight dimension") {
  const PanelData p = panel_of({{1, 3, 0, 0}, {2, 2, 0, 0}, {0, 0, 0, 0}}, 2, 2, 1);
  CHECK_THROWS_AS(fit(p, ObjectiveSpec::aggregated(), FeasibleSet(1.0, 3)), Error);
}

TEST_CASE("impute arithmetic") {
  // Treated: pre mean 4, post 10. Donor: pre mean 0, post 1.
  const PanelData p = panel_of({{3, 5, 10}, {-1, 1, 1}}, 3, 1, 2);
  const FitResult f = fit(p, ObjectiveSpec::disaggregated(), FeasibleSet(1.0, 1));
  const std::vector<EffectEstimate> e = impute(f, p);
  REQUIRE(e.size() == 1);
  CHECK(e[0].period == 3);
  CHECK(e[0].subperiod == 1);
  CHECK(e[0].observed == 10.0);
  CHECK(e[0].imputed == doctest::Approx(5.0));
  CHECK(e[0].effect == doctest::Approx(5.0));
}

TEST_CASE("constant effect on a perfectly fit treated unit is recovered") {
  std::mt19937_64 rng(7);
  const PanelData p = exact_fit_panel(rng, 8, 10, 3, 4, 2, 2.5);
  const FitResult f = fit(p, ObjectiveSpec::combined(0.5), FeasibleSet(1.0, 7));
  const std::vector<EffectEstimate> effects = impute(f, p);
  CHECK(effects.size() == 12);
  for (const auto& e : effects) CHECK(std::abs(e.effect - 2.5) <= 1e-10);
}

TEST_CASE("effect is observed minus imputed") {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 10; ++rep) {
    const PanelData p = testing::random_panel(rng, 5, 6, 2, 3);
    const FitResult f = fit(p, ObjectiveSpec::combined(testing::uniform(rng)), FeasibleSet(1.5, 4));
    for (const auto& e : impute(f, p)) {
      CHECK(e.effect == e.observed - e.imputed);
      // The sum is exact up to two roundings.
      const double scale = std::max({std::abs(e.observed), std::abs(e.imputed), std::abs(e.effect)});
      CHECK(std::abs(e.effect + e.imputed - e.observed) <= 2.0 * std::numeric_limits<double>::epsilon() * scale);
    }
  }
}

TEST_CASE("frontier on the Jensen panel") {
  const PanelData p = panel_of({{1, 3, 0, 0}, {2, 2, 0, 0}, {0, 0, 0, 0}}, 2, 2, 1);
  const std::vector<FrontierPoint> pts = frontier(p, {0.0, 0.5, 1.0}, FeasibleSet(1.0, 2));
  REQUIRE(pts.size() == 3);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    CHECK(pts[i].nu > pts[i - 1].nu);
    CHECK(pts[i].rmse_agg <= pts[i - 1].rmse_agg + 2e-5);
    CHECK(pts[i].rmse_dis + 2e-5 >= pts[i - 1].rmse_dis);
  }
}

TEST_CASE("degenerate frontiers") {
  std::mt19937_64 rng(9);
  SUBCASE("exact-fit donor puts every point at the origin") {
    const PanelData p = exact_fit_panel(rng, 5, 6, 1, 3, 1, 0.0);
    for (const auto& pt : frontier(p, default_nu_grid(), FeasibleSet(1.0, 4))) {
      CHECK(pt.rmse_dis <= 1e-7);
      CHECK(pt.rmse_agg <= 1e-7);
    }
  }
  SUBCASE("one subperiod makes every point identical") {
    const PanelData p = testing::random_panel(rng, 6, 7, 1, 1);
    const auto pts = frontier(p, default_nu_grid(), FeasibleSet(1.0, 5));
    for (const auto& pt : pts) {
      CHECK(pt.rmse_dis == pts.front().rmse_dis);
      CHECK(pt.rmse_agg == pts.front().rmse_agg);
      CHECK(pt.weights.gamma == pts.front().weights.gamma);
    }
  }
}

TEST_CASE("frontier grid validation and endpoints") {
  std::mt19937_64 rng(10);
  const PanelData p = testing::random_panel(rng, 6, 6, 1, 4);
  const FeasibleSet set(1.0, 5);
  CHECK_THROWS_AS(frontier(p, {}, set), Error);
  CHECK_THROWS_AS(frontier(p, {0.5, 0.2}, set), Error);
  CHECK_THROWS_AS(frontier(p, {0.0, 1.2}, set), Error);
  CHECK(default_nu_grid().size() == 21);
  CHECK(default_nu_grid()[1] == doctest::Approx(0.05));

  const auto pts = frontier(p, default_nu_grid(), set);
  const FitResult dis = fit(p, ObjectiveSpec::disaggregated(), set);
  const FitResult agg = fit(p, ObjectiveSpec::aggregated(), set);
  CHECK(pts.front().rmse_dis == dis.rmse_dis);
  CHECK(pts.front().rmse_agg == dis.rmse_agg);
  CHECK(pts.back().rmse_dis == agg.rmse_dis);
  CHECK(pts.back().rmse_agg == agg.rmse_agg);
}

TEST_CASE("frontier is monotone within the gap slack") {
  std::mt19937_64 rng(12);
  for (int rep = 0; rep < 10; ++rep) {
    const PanelData p = testing::random_panel(rng, 8, 8, 1, 4);
    const DemeanedPanel d = demean(p);
    const auto pts = frontier(p, default_nu_grid(), FeasibleSet(1.0, 7));
    for (std::size_t a = 0; a < pts.size(); ++a)
      for (std::size_t b = a + 1; b < pts.size(); ++b) {
        const double eps = 2.0 * (pts[a].solve.fw_gap + pts[b].solve.fw_gap);
        CHECK(q_agg(d, pts[b].weights.gamma) <= q_agg(d, pts[a].weights.gamma) + eps);
        CHECK(q_dis(d, pts[a].weights.gamma) <= q_dis(d, pts[b].weights.gamma) + eps);
      }
  }
}

TEST_CASE("intercepts and scale") {
  std::mt19937_64 rng(14);
  const PanelData p = testing::random_panel(rng, 7, 8, 2, 3);
  const FeasibleSet set(1.0, 6);
  const ObjectiveSpec spec = ObjectiveSpec::combined(0.5);
  const FitResult base = fit(p, spec, set);
  const auto base_effects = impute(base, p);

  Cube shifted = p.outcomes();
  for (std::size_t i = 0; i < 7; ++i)
    for (double& v : shifted.unit(i)) v += 5.0 * static_cast<double>(i) - 11.0;
  const PanelData ps(shifted, 8);
  const FitResult fs = fit(ps, spec, set);
  CHECK(fs.solve.objective_value == doctest::Approx(base.solve.objective_value).epsilon(1e-8));
  const auto shifted_effects = impute(fs, ps);
  for (std::size_t j = 0; j < base_effects.size(); ++j)
    CHECK(std::abs(shifted_effects[j].effect - base_effects[j].effect) <= 1e-9);

  const double s = 3.5;
  Cube scaled = p.outcomes();
  for (std::size_t i = 0; i < 7; ++i)
    for (double& v : scaled.unit(i)) v *= s;
  const PanelData pk(scaled, 8);
  const FitResult fk = fit(pk, spec, set);
  CHECK(fk.rmse_dis == doctest::Approx(s * base.rmse_dis).epsilon(1e-6));
  CHECK(fk.rmse_agg == doctest::Approx(s * base.rmse_agg).epsilon(1e-6));
  CHECK(fk.solve.objective_value / base.solve.objective_value == doctest::Approx(s * s).epsilon(1e-8));
  const auto scaled_effects = impute(fk, pk);
  for (std::size_t j = 0; j < base_effects.size(); ++j)
    CHECK(scaled_effects[j].effect == doctest::Approx(s * base_effects[j].effect).epsilon(1e-6));
}

TEST_CASE("permuting donors leaves the fit unchanged") {
  std::mt19937_64 rng(15);
  const PanelData p = testing::random_panel(rng, 6, 8, 1, 4);
  Cube swapped = p.outcomes();
  for (std::size_t t = 0; t < 9; ++t)
    for (std::size_t k = 0; k < 4; ++k) std::swap(swapped(1, t, k), swapped(5, t, k));
  const FitResult a = fit(p, ObjectiveSpec::combined(0.5), FeasibleSet(1.0, 5));
  const FitResult b = fit(PanelData(swapped, 8), ObjectiveSpec::combined(0.5), FeasibleSet(1.0, 5));
  CHECK(a.solve.objective_value == doctest::Approx(b.solve.objective_value).epsilon(1e-9));
  CHECK(impute(a, p)[0].effect == doctest::Approx(impute(b, PanelData(swapped, 8))[0].effect).epsilon(1e-6));
}

TEST_CASE("placebo in space") {
  std::mt19937_64 rng(16);
  SUBCASE("one series per donor") {
    const PanelData p = testing::random_panel(rng, 3, 5, 2, 2);
    const auto placebos = placebo_in_space(p, ObjectiveSpec::combined(0.5), FeasibleSet(1.0, 2));
    REQUIRE(placebos.size() == 2);
    CHECK(placebos[0].unit == p.unit_labels()[1]);
    CHECK(placebos[1].unit == p.unit_labels()[2]);
    CHECK(placebos[0].effects.size() == 4);
  }
  SUBCASE("single donor is rejected") {
    const PanelData p = testing::random_panel(rng, 2, 5, 2, 2);
    try {
      placebo_in_space(p, ObjectiveSpec::combined(0.5), FeasibleSet(1.0, 1));
      FAIL("expected InsufficientDonors");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InsufficientDonors);
    }
  }
  SUBCASE("symmetric exact-fit panel gives equal pre-period fit") {
    Cube c(5, 6, 2);
    const Cube base = testing::random_cube(rng, 1, 6, 2);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t t = 0; t < 6; ++t)
        for (std::size_t k = 0; k < 2; ++k) c(i, t, k) = base(0, t, k) + static_cast<double>(i);
    const auto placebos = placebo_in_space(PanelData(c, 4), ObjectiveSpec::combined(0.5), FeasibleSet(1.0, 4));
    for (const auto& pl : placebos) {
      CHECK(pl.rmse_dis == doctest::Approx(placebos.front().rmse_dis).epsilon(1e-12));
      CHECK(pl.rmse_dis <= 1e-7);
    }
  }
}

TEST_CASE("pure noise: the treated effect usually lies inside the placebo range") {
  std::size_t inside = 0;
  const std::size_t seeds = 100;
  for (std::size_t seed = 0; seed < seeds; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    const PanelData p = testing::random_panel(rng, 41, 8, 2, 3);
    const ObjectiveSpec spec = ObjectiveSpec::combined(0.5);
    const double treated = mean_effect(impute(fit(p, spec, FeasibleSet(1.0, 40)), p));
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& pl : placebo_in_space(p, spec, FeasibleSet(1.0, 40))) {
      lo = std::min(lo, mean_effect(pl.effects));
      hi = std::max(hi, mean_effect(pl.effects));
    }
    if (treated >= lo && treated <= hi) ++inside;
  }
  CHECK(inside >= 90);
}
