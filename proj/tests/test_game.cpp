#include <cmath>
#include <set>

#include "doctest.h"
#include "reslab/game.hpp"

using namespace reslab;

namespace {

GameConfig config(const Predicate& f, int d, int q, std::size_t samples, std::uint64_t seed) {
  GameConfig cfg{.f = f};
  cfg.d = d;
  cfg.q = q;
  cfg.samples = samples;
  cfg.seed = seed;
  return cfg;
}

PartitionedFunction random_psi(int q, int d, Rng& rng) {
  PartitionedFunction psi(q, d);
  for (std::size_t s = 0; s < psi.num_canonical(); ++s) psi.set_slot(s, static_cast<int>(rng() % 3) - 1);
  return psi;
}

// Independent Monte Carlo route: draw y ~ N_d(zeta) with the Gaussian
// sampler, evaluate psi cell by cell and apply the distinct-cell test on
// the cell ids directly.
PayoffEstimate oracle_payoff(const Predicate& f, const MomentMatrix& zeta,
                             const PartitionedFunction& psi, bool guard, std::size_t n,
                             std::uint64_t seed) {
  const int k = f.arity();
  const int d = psi.d();
  auto spec = GaussianProcessSpec::from_moments(zeta, d);
  Rng rng = make_rng(seed, 7);
  std::vector<double> vals;
  vals.reserve(n);
  for (std::size_t draw = 0; draw < n; ++draw) {
    Eigen::MatrixXd y = sample_gaussians(spec, rng);
    std::vector<Eigen::VectorXd> pts(k);
    std::vector<std::optional<CellId>> cell(k), neg(k);
    for (int i = 0; i < k; ++i) {
      pts[i] = y.row(i).transpose();
      cell[i] = cell_index(pts[i], psi.q());
      neg[i] = cell_index(Eigen::VectorXd(-pts[i]), psi.q());
    }
    double total = 0;
    for (SubsetMask s = 1; s < f.table_size(); ++s) {
      const Rational& c = f.spectrum()[s];
      if (c == 0) continue;
      double prod = 1;
      for (int i = 0; i < k; ++i) {
        if (s >> i & 1U) prod *= psi.eval(pts[i]);
      }
      if (prod == 0) continue;
      if (guard) {
        bool clash = false;
        for (int i = 0; i < k; ++i) {
          for (int j = i + 1; j < k; ++j) {
            if (!(s >> i & 1U) || !(s >> j & 1U)) continue;
            if (cell[i] == cell[j] || cell[i] == neg[j]) clash = true;
          }
        }
        if (clash) continue;
      }
      total += to_double(c) * prod;
    }
    vals.push_back(total);
  }
  return summarize(vals);
}

}  // namespace

TEST_CASE("constant predicate and zero psi pay exactly zero") {
  Predicate one = predicates::constant_one(3);
  GameConfig cfg = config(one, 2, 0, 5000, 3);
  cfg.delta = Rational(1, 4);
  Rng rng = make_rng(50, 0);
  auto dev = default_dev_points(one, 2, cfg.delta);
  for (int trial = 0; trial < 10; ++trial) {
    auto psi = random_psi(0, 2, rng);
    for (const auto& zeta : dev) {
      CHECK(payoff_estimate(zeta, psi, cfg, true).mean == 0);
      CHECK(payoff_estimate(zeta, psi, cfg, false).mean == 0);
    }
  }
  Predicate par = predicates::parity(3);
  GameConfig pc = config(par, 3, 1, 5000, 3);
  for (const auto& zeta : default_dev_points(par, 2, pc.delta)) {
    auto e = payoff_estimate(zeta, PartitionedFunction(1, 3), pc, false);
    CHECK(e.mean == 0);
    CHECK(e.std_error == 0);
  }
}

TEST_CASE("payoff is bounded by the Fourier mass") {
  Predicate maj = predicates::majority(3);
  double mass = 0;
  for (SubsetMask s = 1; s < maj.table_size(); ++s) mass += std::abs(to_double(maj.spectrum()[s]));
  CHECK(mass <= 8);
  PayoffSampler sampler(maj, 2, 3000, 9);
  Rng rng = make_rng(51, 0);
  for (const auto& zeta : default_dev_points(maj, 2, Rational(1, 4))) {
    auto cells = sampler.sample(zeta, 1);
    auto psi = random_psi(1, 2, rng);
    for (bool guard : {false, true}) {
      for (double v : sampler.values(cells, psi, guard)) CHECK(std::abs(v) <= mass + 1e-12);
    }
  }
}

TEST_CASE("sampler agrees with an independent Monte Carlo route") {
  Rng rng = make_rng(52, 0);
  for (const Predicate& f : {predicates::majority(3), predicates::two_lin()}) {
    auto dev = default_dev_points(f, 2, Rational(1, 4));
    for (int trial = 0; trial < 4; ++trial) {
      const auto& zeta = dev[rng() % dev.size()];
      const int q = static_cast<int>(rng() % 2);
      auto psi = random_psi(q, 2, rng);
      GameConfig cfg = config(f, 2, q, 40000, 100 + trial);
      for (bool guard : {false, true}) {
        auto a = payoff_estimate(zeta, psi, cfg, guard);
        auto b = oracle_payoff(f, zeta, psi, guard, 40000, 200 + trial);
        const double sigma = std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
        INFO("guard=" << guard << " a=" << a.mean << " b=" << b.mean << " sigma=" << sigma);
        CHECK(std::abs(a.mean - b.mean) <= 4 * sigma + 1e-9);
      }
    }
  }
}

TEST_CASE("pairwise-independent point gives zero columns for 3-parity") {
  // Independent coordinates and odd psi: every multilinear term has mean 0.
  Predicate par = predicates::parity(3);
  GameConfig cfg = config(par, 2, 0, 50000, 11);
  cfg.dev_points = {noise_shift(MomentMatrix(3), cfg.delta)};
  auto psis = enumerate_psi(0, 2, 100);
  auto pm = payoff_matrix(cfg, psis);
  for (int j = 0; j < pm.game.cols; ++j) {
    CHECK(std::abs(pm.game.at(0, j)) <= 5 * pm.std_errors[j] + 1e-12);
  }
}

TEST_CASE("duplicated dev point yields a duplicated row") {
  Predicate maj = predicates::majority(3);
  GameConfig cfg = config(maj, 2, 0, 4000, 12);
  auto dev = default_dev_points(maj, 1, cfg.delta);
  cfg.dev_points = {dev[0], dev[1], dev[0]};
  auto pm = payoff_matrix(cfg, enumerate_psi(0, 2, 100));
  for (int j = 0; j < pm.game.cols; ++j) CHECK(pm.game.at(0, j) == pm.game.at(2, j));
}

TEST_CASE("psi enumeration") {
  CHECK(psi_count(0, 1) == 3);
  CHECK(psi_count(0, 2) == 9);
  CHECK(psi_count(1, 2) == 6561);
  CHECK(psi_count(3, 6) == std::numeric_limits<std::uint64_t>::max());
  auto all = enumerate_psi(0, 2, 100);
  REQUIRE(all.size() == 9);
  std::set<std::string> seen;
  for (const auto& psi : all) seen.insert(serialize_psi(psi));
  CHECK(seen.size() == 9);
  CHECK(all.front().is_zero());
  CHECK_THROWS_AS(enumerate_psi(1, 2, 100), Error);
}

TEST_CASE("default dev points are nested and lie in the shifted body") {
  for (const Predicate& f : {predicates::parity(3), predicates::majority(3), predicates::two_lin()}) {
    const Rational delta(1, 4);
    auto r1 = default_dev_points(f, 1, delta);
    CHECK(r1.size() == f.satisfying().size());
    auto prev = r1;
    for (int p = 2; p <= 3; ++p) {
      auto cur = default_dev_points(f, p, delta);
      REQUIRE(cur.size() >= prev.size());
      CHECK(std::equal(prev.begin(), prev.end(), cur.begin()));
      for (const auto& z : cur) CHECK_NOTHROW(check_dev_point(z, delta));
      prev = cur;
    }
  }
  // An unshifted point mass has a zero covariance.
  MomentMatrix pm(2, std::vector<Rational>(9, Rational(1)));
  CHECK_THROWS_AS(check_dev_point(pm, Rational(1, 4)), Error);
}

TEST_CASE("guard gap shrinks as the partition refines") {
  Predicate maj = predicates::majority(3);
  PayoffSampler sampler(maj, 2, 40000, 13);
  auto dev = default_dev_points(maj, 2, Rational(1, 4));
  Rng rng = make_rng(53, 0);
  double gap0 = 0, gap2 = 0;
  for (int trial = 0; trial < 6; ++trial) {
    PartitionedFunction coarse = random_psi(0, 2, rng);
    if (coarse.is_zero()) coarse.set_slot(0, 1);
    PartitionedFunction fine = coarse.refine().refine();
    for (const auto& zeta : dev) {
      auto c0 = sampler.sample(zeta, 0);
      auto c2 = sampler.sample(zeta, 2);
      // The refined psi is the same function, so opay is unchanged.
      CHECK(sampler.estimate(c0, coarse, false).mean ==
            doctest::Approx(sampler.estimate(c2, fine, false).mean).epsilon(1e-12));
      gap0 += std::abs(sampler.estimate(c0, coarse, true).mean - sampler.estimate(c0, coarse, false).mean);
      gap2 += std::abs(sampler.estimate(c2, fine, true).mean - sampler.estimate(c2, fine, false).mean);
    }
  }
  INFO("gap0=" << gap0 << " gap2=" << gap2);
  CHECK(gap2 < gap0);
}

TEST_CASE("game value monotone under more rows and more columns") {
  Predicate maj = predicates::majority(3);
  ScanOptions opt;
  opt.d = 2;
  opt.samples = 2000;
  opt.seed = 14;
  opt.guard = false;
  auto rep = scan_limits(maj, {1, 2}, {0, 1}, opt);
  REQUIRE(rep.grid.size() == 4);
  auto at = [&](int p, int q) {
    for (const auto& c : rep.grid) {
      if (c.p == p && c.q == q) return c;
    }
    FAIL("missing cell");
    return ScanCell{};
  };
  for (int q : {0, 1}) CHECK(at(2, q).value <= at(1, q).value + 1e-9);
  // With opay a refined psi is the same function; q=1 enumerates them all.
  for (int p : {1, 2}) CHECK(at(p, 1).value >= at(p, 0).value - 1e-9);
  for (const auto& c : rep.grid) CHECK(c.exact);
  CHECK(rep.violations.empty());
}

TEST_CASE("scan validation") {
  Predicate maj = predicates::majority(3);
  ScanOptions opt;
  opt.d = 2;
  opt.samples = 500;
  CHECK_THROWS_AS(scan_limits(maj, {2, 1}, {0}, opt), Error);
  CHECK_THROWS_AS(scan_limits(maj, {1}, {}, opt), Error);
  auto r1 = default_dev_points(maj, 1, opt.delta);
  auto r2 = default_dev_points(maj, 2, opt.delta);
  std::reverse(r2.begin(), r2.end());
  opt.dev_families = {r1, r2};
  CHECK_THROWS_WITH_AS(scan_limits(maj, {1, 2}, {0}, opt), doctest::Contains("non-nested"), Error);
}

TEST_CASE("2LIN has a positive game value") {
  Predicate lin = predicates::two_lin();
  GameConfig cfg = config(lin, 3, 0, 20000, 15);
  cfg.dev_points = default_dev_points(lin, 1, cfg.delta);
  auto rep = game_value_pq(cfg, 1000);
  CHECK(rep.exact);
  CHECK(rep.strategies.size() == 81);
  INFO("value=" << rep.value << " sigma=" << rep.sigma);
  CHECK(rep.value > 3 * rep.sigma);
  double sum = 0;
  for (double w : rep.col_strategy) sum += w;
  CHECK(sum == doctest::Approx(1));
}
