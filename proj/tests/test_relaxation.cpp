#include <cmath>

#include "doctest.h"
#include "reslab/basic_relaxation.hpp"
#include "reslab/csp.hpp"
#include "reslab/sherali_adams.hpp"

using namespace reslab;

namespace {

CspInstance random_instance(const Predicate& f, int n, int m, Rng& rng) {
  std::vector<Constraint> cs;
  const int k = f.arity();
  for (int c = 0; c < m; ++c) {
    Constraint con;
    while (static_cast<int>(con.vars.size()) < k) {
      int v = static_cast<int>(rng() % n);
      if (std::find(con.vars.begin(), con.vars.end(), v) == con.vars.end()) con.vars.push_back(v);
    }
    for (int j = 0; j < k; ++j) con.signs.push_back((rng() & 1U) ? 1 : -1);
    cs.push_back(con);
  }
  return CspInstance(f, n, cs);
}

// Fraction of satisfied constraints with every literal evaluated by hand.
Rational oracle_sat(const CspInstance& phi, const std::vector<int>& x) {
  const Predicate& f = phi.predicate();
  long count = 0;
  for (const auto& c : phi.constraints()) {
    Assignment idx = 0;
    for (std::size_t j = 0; j < c.vars.size(); ++j) {
      if (x[c.vars[j]] * c.signs[j] < 0) idx |= Assignment{1} << j;
    }
    if (f(idx)) ++count;
  }
  return Rational(count) / static_cast<long>(phi.size());
}

std::vector<int> values_of(std::uint64_t bits, int n) {
  std::vector<int> x(n);
  for (int v = 0; v < n; ++v) x[v] = ((bits >> v) & 1U) ? -1 : 1;
  return x;
}

Predicate unary_true() { return Predicate::from_satisfying(1, {"+"}); }

}  // namespace

TEST_CASE("brute force examples") {
  CspInstance single(predicates::parity(3), 3, {{{0, 1, 2}, {1, 1, 1}}});
  CHECK(brute_force_opt(single).opt == 1);
  CspInstance contradiction(unary_true(), 1, {{{0}, {1}}, {{0}, {-1}}});
  auto bf = brute_force_opt(contradiction);
  CHECK(bf.opt == Rational(1, 2));
  CHECK(bf.min == Rational(1, 2));
  CHECK(estimate_sat(single, std::vector<int>{1, 1, 1}) == 1);
}

TEST_CASE("brute force agrees with direct enumeration") {
  Rng rng = make_rng(41, 0);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 3 + static_cast<int>(rng() % 8);
    Predicate f = (trial % 2) ? predicates::parity(3) : predicates::majority(3);
    CspInstance phi = random_instance(f, n, 1 + static_cast<int>(rng() % 20), rng);
    Rational best = 0, worst = 1;
    double mean = 0;
    for (std::uint64_t a = 0; a < (std::uint64_t{1} << n); ++a) {
      Rational s = oracle_sat(phi, values_of(a, n));
      best = std::max(best, s);
      worst = std::min(worst, s);
      mean += to_double(s);
      REQUIRE(estimate_sat(phi, values_of(a, n)) == s);
    }
    mean /= static_cast<double>(std::uint64_t{1} << n);
    auto bf = brute_force_opt(phi, 2);
    CHECK(bf.opt == best);
    CHECK(bf.min == worst);
    CHECK(bf.mean() == doctest::Approx(mean));
    CHECK(oracle_sat(phi, unpack_assignment(bf.argmax, n)) == best);
    std::uint64_t total = 0;
    for (auto h : bf.histogram) total += h;
    CHECK(total == (std::uint64_t{1} << n));
  }
}

TEST_CASE("random 3-parity histogram averages to rho") {
  Rng rng = make_rng(42, 0);
  CspInstance phi = random_instance(predicates::parity(3), 10, 200, rng);
  // Each constraint is satisfied by exactly half the assignments.
  CHECK(brute_force_opt(phi).mean() == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("negation symmetry and sampling estimate") {
  Rng rng = make_rng(43, 0);
  CspInstance phi = random_instance(predicates::majority(3), 8, 30, rng);
  std::vector<int> x(8);
  for (auto& v : x) v = (rng() & 1U) ? 1 : -1;
  // Flip variable 3 and every sign attached to it.
  std::vector<Constraint> flipped = phi.constraints();
  for (auto& c : flipped) {
    for (std::size_t j = 0; j < c.vars.size(); ++j) {
      if (c.vars[j] == 3) c.signs[j] = -c.signs[j];
    }
  }
  std::vector<int> y = x;
  y[3] = -y[3];
  CHECK(estimate_sat(CspInstance(phi.predicate(), 8, flipped), y) == estimate_sat(phi, x));

  auto est = estimate_sat(
      phi,
      [](Rng& r) {
        std::vector<int> a(8);
        for (auto& v : a) v = (r() & 1U) ? 1 : -1;
        return a;
      },
      10000, 5);
  CHECK(std::abs(est.mean - 0.5) <= 3 * est.std_error + 1e-12);
  CHECK(est.draws == 10000);
}

TEST_CASE("instance validation and JSON round trip") {
  Predicate f = predicates::parity(3);
  CHECK_THROWS_AS(CspInstance(f, 2, {{{0, 1, 2}, {1, 1, 1}}}), Error);
  CHECK_THROWS_AS(CspInstance(f, 3, {{{0, 1}, {1, 1}}}), Error);
  CHECK_THROWS_AS(CspInstance(f, 3, {{{0, 1, 2}, {1, 2, 1}}}), Error);
  Rng rng = make_rng(44, 0);
  CspInstance phi = random_instance(f, 9, 12, rng);
  CHECK(parse_instance(serialize_instance(phi)) == phi);
  CspInstance big(f, 40, {{{0, 1, 2}, {1, 1, 1}}});
  CHECK_THROWS_AS(brute_force_opt(big), Error);
}

TEST_CASE("compact_instance keeps satisfaction counts") {
  Predicate f = predicates::parity(3);
  CspInstance phi(f, 10, {{{9, 2, 5}, {1, -1, 1}}, {{5, 7, 2}, {-1, 1, 1}}});
  std::vector<int> mapping;
  CspInstance c = compact_instance(phi, &mapping);
  CHECK(c.num_vars() == 4);
  CHECK(mapping == std::vector<int>{2, 5, 7, 9});
  CHECK(brute_force_opt(c).opt == brute_force_opt(phi).opt);
  CHECK(brute_force_opt(c).min == brute_force_opt(phi).min);
}

TEST_CASE("integral families are consistent and score sat") {
  Rng rng = make_rng(45, 0);
  for (int trial = 0; trial < 20; ++trial) {
    CspInstance phi = random_instance(predicates::majority(3), 6, 8, rng);
    FullAssignment x = rng() & 63U;
    auto fam = LocalDistributionFamily::integral(phi, x, 3);
    CHECK(verify_consistency(fam).consistent());
    CHECK(sa_objective(phi, fam) == oracle_sat(phi, unpack_assignment(x, 6)));
  }
  CspInstance phi = random_instance(predicates::majority(3), 6, 8, rng);
  auto uni = LocalDistributionFamily::uniform(downward_closure(phi, {}), 3);
  CHECK(verify_consistency(uni).consistent());
  CHECK(sa_objective(phi, uni) == Rational(1, 2));
}

TEST_CASE("Sherali-Adams examples") {
  CspInstance single(predicates::parity(3), 3, {{{0, 1, 2}, {1, -1, 1}}});
  auto r = lp_solve(build_sherali_adams(single, 3));
  REQUIRE(r.status == LpStatus::kOptimal);
  CHECK(r.objective == 1);
  CspInstance contradiction(unary_true(), 1, {{{0}, {1}}, {{0}, {-1}}});
  auto rc = lp_solve(build_sherali_adams(contradiction, 1));
  REQUIRE(rc.status == LpStatus::kOptimal);
  CHECK(rc.objective == Rational(1, 2));
  CHECK_THROWS_AS(build_sherali_adams(single, 2), Error);
}

TEST_CASE("Sherali-Adams relaxes the integral optimum") {
  Rng rng = make_rng(46, 0);
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 4 + static_cast<int>(rng() % 3);
    Predicate f = (trial % 2) ? predicates::parity(3) : predicates::majority(3);
    CspInstance phi = random_instance(f, n, 3 + static_cast<int>(rng() % 6), rng);
    SaLpLayout layout;
    LinearProgram lp = build_sherali_adams(phi, 3, &layout);
    auto res = lp_solve(lp);
    REQUIRE(res.status == LpStatus::kOptimal);
    CHECK(res.objective >= brute_force_opt(phi).opt);
    auto fam = family_from_solution(layout, res.primal);
    CHECK(verify_consistency(fam).consistent());
    CHECK(sa_objective(phi, fam) == res.objective);
  }
}

TEST_CASE("frustrated 2LIN triangle needs three rounds") {
  // Odd cycle of 2LIN-style disagreements: x0 = x1, x1 = x2, x2 = -x0.
  Predicate lin = predicates::two_lin();
  CspInstance tri(lin, 3, {{{0, 1}, {1, 1}}, {{1, 2}, {1, 1}}, {{2, 0}, {1, -1}}});
  CHECK(brute_force_opt(tri).opt == Rational(2, 3));
  auto r2 = lp_solve(build_sherali_adams(tri, 2));
  auto r3 = lp_solve(build_sherali_adams(tri, 3));
  CHECK(r2.objective == 1);  // pairwise-consistent but globally frustrated
  CHECK(r3.objective == Rational(2, 3));
}

TEST_CASE("consistency correction") {
  Rng rng = make_rng(47, 0);
  CspInstance phi = random_instance(predicates::majority(3), 6, 5, rng);
  auto fam = LocalDistributionFamily::integral(phi, 0b101101, 3);
  auto same = correct_local_distributions(fam);
  CHECK(same.total_l1 == 0);
  CHECK(same.family == fam);

  // Perturb one distribution by gamma and renormalize.
  const Rational gamma(1, 20);
  auto dists = fam.dists();
  auto it = std::prev(dists.end());
  std::vector<Rational> p = it->second;
  for (auto& v : p) v = v * (1 - gamma);
  p[0] += gamma;
  LocalDistributionFamily bent = fam;
  bent.set(it->first, p);
  CHECK_FALSE(verify_consistency(bent).consistent());
  auto fixed = correct_local_distributions(bent);
  CHECK(verify_consistency(fixed.family).consistent());
  CHECK(fixed.total_l1 <= 2 * gamma);
  CHECK(fixed.max_subset_l1 <= 2 * gamma);
}

TEST_CASE("marginalize and family JSON") {
  // Distribution over {3, 7}: P(+,+) = 1/2, P(-,+) = 1/4, P(+,-) = 1/4.
  std::vector<Rational> p = {Rational(1, 2), Rational(1, 4), Rational(1, 4), 0};
  auto m = marginalize({3, 7}, p, {3});
  CHECK(m == std::vector<Rational>{Rational(3, 4), Rational(1, 4)});
  CHECK(marginalize({3, 7}, p, {}) == std::vector<Rational>{1});
  LocalDistributionFamily fam;
  fam.r = 2;
  fam.set({3, 7}, p);
  fam.set({3}, m);
  CHECK(parse_family(serialize_family(fam)) == fam);
  CHECK_THROWS_AS(fam.set({7, 3}, p), Error);
  CHECK_THROWS_AS(fam.set({3}, {Rational(1, 2), Rational(1, 3)}), Error);
}

TEST_CASE("basic relaxation: integral embedding") {
  Rng rng = make_rng(48, 0);
  for (int trial = 0; trial < 10; ++trial) {
    CspInstance phi = random_instance(predicates::parity(3), 7, 10, rng);
    FullAssignment x = rng() & 127U;
    BasicSolution sol = integral_embedding(phi, x);
    auto v = verify_basic_solution(phi, sol, 1e-12);
    CHECK(v.passes);
    CHECK(v.frac == oracle_sat(phi, unpack_assignment(x, 7)));
    auto back = parse_basic_solution(serialize_basic_solution(sol));
    CHECK(back.unit == sol.unit);
    CHECK(back.plus == sol.plus);
    CHECK(back.minus == sol.minus);
    CHECK(back.local == sol.local);
  }
}

TEST_CASE("basic relaxation: disjoint blocks and corruption") {
  Predicate par = predicates::parity(3);
  CspInstance phi(par, 6, {{{0, 1, 2}, {1, 1, 1}}, {{3, 4, 5}, {1, -1, 1}}});
  // Uniform over the satisfying literal tuples; local vectors index positions.
  std::vector<Rational> local(8, Rational(0));
  for (Assignment a : par.satisfying()) local[a] = Rational(1, 4);
  std::vector<Rational> local2(8, Rational(0));
  for (Assignment a : par.satisfying()) local2[a ^ 0b010] = Rational(1, 4);
  BasicSolution sol = distribution_embedding(phi, {local, local2});
  auto v = verify_basic_solution(phi, sol, 1e-9);
  CHECK(v.passes);
  CHECK(v.frac == 1);
  sol.plus[4][0] += 0.3;
  auto bad = verify_basic_solution(phi, sol, 1e-9);
  CHECK_FALSE(bad.passes);
  CHECK(bad.max_sum_identity > 0.1);
}
