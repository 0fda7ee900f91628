#include <cmath>

#include "doctest.h"
#include "reslab/rng.hpp"
#include "reslab/vanishing.hpp"

using namespace reslab;

namespace {

FiniteMeasure single(const Predicate& f, const CubeDistribution& nu) {
  return FiniteMeasure(f, {{Rational(1), nu}});
}

bool all_levels_vanish(const FiniteMeasure& m, bool first_moments) {
  const auto& f = m.predicate();
  for (int t = 1; t <= f.arity(); ++t) {
    auto g = first_moments ? signed_bias_groups(m, t, f.spectrum())
                           : signed_projection_groups(m, t, f.spectrum());
    if (!g.identically_zero()) return false;
  }
  return true;
}

// Symmetric predicate on k bits from the set of allowed numbers of -1's.
Predicate symmetric_predicate(int k, unsigned weights) {
  std::vector<bool> table(std::size_t{1} << k);
  for (Assignment x = 0; x < table.size(); ++x) {
    table[x] = (weights >> __builtin_popcount(x)) & 1U;
  }
  return Predicate(k, table);
}

Eigen::MatrixXd random_points(int t, int d, Rng& rng) {
  std::normal_distribution<double> n(0, 1);
  Eigen::MatrixXd p(t, d);
  for (int i = 0; i < t; ++i) {
    for (int l = 0; l < d; ++l) p(i, l) = n(rng);
  }
  return p;
}

}  // namespace

TEST_CASE("signed groups: spec examples") {
  Predicate par = predicates::parity(3);
  auto uniform = CubeDistribution::uniform_over(3, par.satisfying());
  CHECK(all_levels_vanish(single(par, uniform), false));

  Predicate one = predicates::constant_one(3);
  CHECK(all_levels_vanish(single(one, CubeDistribution::point_mass(3, 0)), false));

  auto plus = single(par, CubeDistribution::point_mass(3, 0));
  CHECK(signed_projection_groups(plus, 1, par.spectrum()).identically_zero());
  auto g3 = signed_projection_groups(plus, 3, par.spectrum());
  CHECK_FALSE(g3.identically_zero());
  CHECK(g3.nonzero_count() > 0);
  CHECK_THROWS_AS(signed_projection_groups(plus, 0, par.spectrum()), Error);
  CHECK_THROWS_AS(signed_projection_groups(plus, 4, par.spectrum()), Error);
}

TEST_CASE("level-3 coefficient of the +++ point mass by hand") {
  // Only S = {1,2,3}; all biases and correlations are 1, so the image under
  // (pi, b) depends only on b, and each of the 8 sign patterns lands in its
  // own group with coefficient (1/2) * prod(b) / 8 after summing the 6
  // permutations with weight 1/6 each.
  Predicate par = predicates::parity(3);
  auto g = signed_projection_groups(single(par, CubeDistribution::point_mass(3, 0)), 3,
                                    par.spectrum());
  REQUIRE(g.coefficients.size() == 8);
  for (const auto& [key, c] : g.coefficients) CHECK(abs(c) == Rational(1, 16));
}

TEST_CASE("vanishing_feasible on the examples") {
  Predicate par = predicates::parity(3);
  SearchReport rep;
  auto m = vanishing_feasible(par, {CubeDistribution::uniform_over(3, par.satisfying())}, &rep);
  REQUIRE(m.has_value());
  CHECK(rep.found);
  CHECK(all_levels_vanish(*m, false));

  Predicate maj = predicates::majority(3);
  SearchReport mrep;
  CHECK_FALSE(vanishing_feasible(maj, point_mass_support(maj), &mrep).has_value());
  CHECK(mrep.farkas_verified);
  CHECK_FALSE(mrep.farkas.empty());
  // The level-1 coefficients of MAJ3 that make it infeasible are positive.
  for (int i = 0; i < 3; ++i) CHECK(maj.spectrum()[1U << i] > 0);
  CHECK(std::find(mrep.binding_levels.begin(), mrep.binding_levels.end(), 1) !=
        mrep.binding_levels.end());

  CHECK_THROWS_AS(vanishing_feasible(par, {}), Error);
  CHECK_THROWS_AS(vanishing_feasible(par, {CubeDistribution::point_mass(3, 1)}), Error);
}

TEST_CASE("MAJ3 has no measure under any built-in strategy") {
  Predicate maj = predicates::majority(3);
  for (auto s : {SupportStrategy::kPairwisePoint, SupportStrategy::kSatisfyingPointMasses,
                 SupportStrategy::kSymmetrizedOrbits}) {
    for (bool fm : {false, true}) {
      auto [m, rep] = find_vanishing_measure(maj, s, {}, fm);
      CHECK_FALSE(m.has_value());
      CHECK_FALSE(rep.found);
    }
  }
  CHECK_FALSE(charlp_symmetric_check(maj).member);
}

TEST_CASE("2LIN: no full-moment measure, first-moment measure from the zero-bias orbit") {
  Predicate lin = predicates::two_lin();
  // Both point masses have correlation 1; the level-2 images never cancel.
  auto [pm, pm_rep] = find_vanishing_measure(lin, SupportStrategy::kSatisfyingPointMasses);
  CHECK_FALSE(pm.has_value());
  auto [lp, lp_rep] = find_vanishing_measure(lin, SupportStrategy::kSymmetrizedOrbits, {}, true);
  REQUIRE(lp.has_value());
  CHECK(lp_rep.first_moments_only);
  CHECK(all_levels_vanish(*lp, true));
  auto w = charlp_symmetric_check(lin);
  CHECK(w.member);
  REQUIRE(w.x.has_value());
  REQUIRE(w.y.has_value());
  CHECK(lin(*w.x));
  CHECK(lin(*w.y));
}

TEST_CASE("charlp witnesses for 3-parity") {
  auto w = charlp_symmetric_check(predicates::parity(3));
  REQUIRE(w.member);
  int sx = 0, sy = 0;
  for (int i = 0; i < 3; ++i) {
    sx += coordinate(*w.x, i);
    sy += coordinate(*w.y, i);
  }
  CHECK(sx >= 0);
  CHECK(sy <= 0);
  CHECK_THROWS_AS(charlp_symmetric_check(Predicate::from_satisfying(2, {"++", "+-"})), Error);
}

TEST_CASE("constant predicate is trivially found") {
  Predicate one = predicates::constant_one(2);
  auto m = charlp_general_search(one, point_mass_support(one));
  CHECK(m.has_value());
}

TEST_CASE("feasible measures vanish exactly (consistency)") {
  for (int k = 2; k <= 4; ++k) {
    for (unsigned w = 1; w < (1U << (k + 1)); ++w) {
      Predicate f = symmetric_predicate(k, w);
      auto [m, rep] = find_vanishing_measure(f, SupportStrategy::kSymmetrizedOrbits);
      if (m) CHECK(all_levels_vanish(*m, false));
      auto [mf, repf] = find_vanishing_measure(f, SupportStrategy::kSymmetrizedOrbits, {}, true);
      if (mf) CHECK(all_levels_vanish(*mf, true));
    }
  }
}

TEST_CASE("symmetric shortcut agrees with the general first-moment search") {
  for (int k = 1; k <= 4; ++k) {
    for (unsigned w = 1; w < (1U << (k + 1)); ++w) {
      Predicate f = symmetric_predicate(k, w);
      const bool shortcut = charlp_symmetric_check(f).member;
      const bool general =
          charlp_general_search(f, symmetrized_orbits(f, {})).has_value();
      INFO("k=" << k << " weights=" << w);
      CHECK(shortcut == general);
    }
  }
}

TEST_CASE("pairwise-independent point implies a pairwise_point measure") {
  for (int k = 2; k <= 4; ++k) {
    for (unsigned w = 1; w < (1U << (k + 1)); ++w) {
      Predicate f = symmetric_predicate(k, w);
      if (!pairwise_independent_point(f)) continue;
      auto [m, rep] = find_vanishing_measure(f, SupportStrategy::kPairwisePoint);
      CHECK(m.has_value());
    }
  }
}

TEST_CASE("theta vanishes for the parity point and not for +++") {
  Predicate par = predicates::parity(3);
  auto vanishing = single(par, CubeDistribution::uniform_over(3, par.satisfying()));
  Rng rng = make_rng(21, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const int t = 1 + static_cast<int>(rng() % 3);
    CHECK(std::abs(theta_eval(vanishing, Rational(1, 4), t, random_points(t, 4, rng))) <= 1e-12);
  }
  auto plus = single(par, CubeDistribution::point_mass(3, 0));
  CHECK(theta_eval(plus, Rational(1, 4), 1, random_points(1, 4, rng)) == 0);
  // At the origin every sign image has the same density and the signs
  // cancel; points along the bias direction break the tie.
  CHECK(std::abs(theta_eval(plus, Rational(1, 4), 3, Eigen::MatrixXd::Zero(3, 4))) < 1e-15);
  CHECK(theta_eval(plus, Rational(1, 4), 3, Eigen::MatrixXd::Constant(3, 4, 0.5)) > 0);
  CHECK_THROWS_AS(theta_eval(plus, Rational(0), 3, Eigen::MatrixXd::Zero(3, 4)), Error);
}

TEST_CASE("measure JSON round trip") {
  Predicate par = predicates::parity(3);
  FiniteMeasure m(par, {{Rational(1, 3), CubeDistribution::uniform_over(3, par.satisfying())},
                        {Rational(2, 3), CubeDistribution::point_mass(3, 0)}});
  FiniteMeasure back = parse_measure(serialize_measure(m));
  REQUIRE(back.size() == 2);
  CHECK(back.predicate() == par);
  for (std::size_t a = 0; a < 2; ++a) {
    CHECK(back.atoms()[a].weight == m.atoms()[a].weight);
    CHECK(back.atoms()[a].nu == m.atoms()[a].nu);
    CHECK(back.atoms()[a].zeta == m.atoms()[a].zeta);
  }
  CHECK_THROWS_AS(FiniteMeasure(par, {{Rational(1, 2), CubeDistribution::point_mass(3, 0)}}),
                  Error);
  CHECK(parse_strategy("custom") == SupportStrategy::kCustom);
  CHECK_THROWS_AS(parse_strategy("bogus"), Error);
}
