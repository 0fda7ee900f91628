#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "reslab/moment.hpp"
#include "reslab/rng.hpp"

using namespace reslab;

namespace {

CubeDistribution random_distribution(int k, const std::vector<Assignment>& support, Rng& rng) {
  std::vector<Rational> p(std::size_t{1} << k, Rational(0));
  long total = 0;
  std::vector<long> w(support.size());
  for (auto& x : w) {
    x = 1 + static_cast<long>(rng() % 9);
    total += x;
  }
  for (std::size_t a = 0; a < support.size(); ++a) p[support[a]] = Rational(w[a]) / total;
  return CubeDistribution(k, p);
}

std::vector<Assignment> all_points(int k) {
  std::vector<Assignment> out(std::size_t{1} << k);
  std::iota(out.begin(), out.end(), 0);
  return out;
}

// E[x_i x_j] straight from the definition.
Rational oracle_moment(const CubeDistribution& nu, int i, int j) {
  Rational s = 0;
  for (Assignment x = 0; x < nu.probs().size(); ++x) {
    int v = (i < 0 ? 1 : coordinate(x, i)) * (j < 0 ? 1 : coordinate(x, j));
    s += v * nu[x];
  }
  return s;
}

MomentMatrix all_ones(int t) {
  return MomentMatrix(t, std::vector<Rational>((t + 1) * (t + 1), Rational(1)));
}

}  // namespace

TEST_CASE("moments_of examples") {
  Predicate par = predicates::parity(3);
  CHECK(moments_of(CubeDistribution::uniform_over(3, par.satisfying())) == MomentMatrix(3));
  CHECK(moments_of(CubeDistribution::point_mass(3, 0)) == all_ones(3));
  auto lin = moments_of(CubeDistribution::uniform_over(2, predicates::two_lin().satisfying()));
  CHECK(lin(0, 1) == 0);
  CHECK(lin(0, 2) == 0);
  CHECK(lin(1, 2) == 1);
}

TEST_CASE("moments_of agrees with direct expectations and is PSD") {
  Rng rng = make_rng(3, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 1 + static_cast<int>(rng() % 4);
    auto pts = all_points(k);
    std::shuffle(pts.begin(), pts.end(), rng);
    pts.resize(1 + rng() % pts.size());
    CubeDistribution nu = random_distribution(k, pts, rng);
    MomentMatrix z = moments_of(nu);
    for (int i = 0; i <= k; ++i) {
      for (int j = 0; j <= k; ++j) {
        REQUIRE(z(i, j) == (i == j ? Rational(1) : oracle_moment(nu, i - 1, j - 1)));
      }
    }
    CHECK(is_psd_exact(z));
    CHECK(covariance_of(z).min_eigenvalue >= -1e-10);
    // Second moment matrix of (1, x) is also PSD in floating point.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(z.to_eigen());
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
  }
}

TEST_CASE("is_psd_exact rejects indefinite matrices") {
  // Three pairwise correlations of -1 are impossible.
  std::vector<Rational> e = {1, 0, 0, 0, 0, 1, -1, -1, 0, -1, 1, -1, 0, -1, -1, 1};
  MomentMatrix bad(3, e);
  CHECK_FALSE(is_psd_exact(bad));
  CHECK(covariance_of(bad).min_eigenvalue < 0);
}

TEST_CASE("MomentMatrix validation") {
  CHECK_THROWS_AS(MomentMatrix(1, {1, 2, 2, 1}), Error);
  CHECK_THROWS_AS(MomentMatrix(1, {1, 0, Rational(1, 2), 1}), Error);
  CHECK_THROWS_AS(MomentMatrix(1, {2, 0, 0, 1}), Error);
  CHECK_THROWS_AS(CubeDistribution(1, {Rational(1, 2), Rational(1, 3)}), Error);
  CHECK_THROWS_AS(CubeDistribution(1, {Rational(3, 2), Rational(-1, 2)}), Error);
}

TEST_CASE("restrict_permute_sign examples") {
  MomentMatrix z = all_ones(2);
  auto r = restrict_permute_sign(z, {0, 1}, {0, 1}, {-1, 1});
  CHECK(r(0, 1) == -1);
  CHECK(r(0, 2) == 1);
  CHECK(r(1, 2) == -1);
  CHECK(restrict_permute_sign(MomentMatrix(4), {1, 3}, {1, 0}, {-1, -1}) == MomentMatrix(2));
  auto lin = moments_of(CubeDistribution::uniform_over(2, predicates::two_lin().satisfying()));
  CHECK(restrict_permute_sign(lin, {0}, {0}, {-1}) == MomentMatrix(1));
  CHECK_THROWS_AS(restrict_permute_sign(z, {0, 5}, {0, 1}, {1, 1}), Error);
  CHECK_THROWS_AS(restrict_permute_sign(z, {0, 1}, {0, 0}, {1, 1}), Error);
  CHECK_THROWS_AS(restrict_permute_sign(z, {}, {}, {}), Error);
}

TEST_CASE("restrict_permute_sign matches the definition and its algebra") {
  Rng rng = make_rng(4, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + static_cast<int>(rng() % 3);
    auto pts = all_points(k);
    MomentMatrix z = moments_of(random_distribution(k, pts, rng));
    std::vector<int> s;
    for (int i = 0; i < k; ++i) {
      if (rng() & 1U) s.push_back(i);
    }
    if (s.empty()) s.push_back(0);
    const int t = static_cast<int>(s.size());
    std::vector<int> perm(t);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> b(t);
    for (auto& v : b) v = (rng() & 1U) ? 1 : -1;
    auto r = restrict_permute_sign(z, s, perm, b);
    // Oracle: entries of (1 b)(1 b)^T times rows pi(i) of zeta_S.
    for (int i = 0; i <= t; ++i) {
      for (int j = 0; j <= t; ++j) {
        const int zi = i == 0 ? 0 : s[perm[i - 1]] + 1;
        const int zj = j == 0 ? 0 : s[perm[j - 1]] + 1;
        const int bi = i == 0 ? 1 : b[i - 1];
        const int bj = j == 0 ? 1 : b[j - 1];
        REQUIRE(r(i, j) == (i == j ? Rational(1) : bi * bj * z(zi, zj)));
      }
    }
    // Sign involution.
    std::vector<int> id(t);
    std::iota(id.begin(), id.end(), 0);
    std::vector<int> ones(t, 1);
    CHECK(restrict_permute_sign(r, id, id, b) == restrict_permute_sign(z, s, perm, ones));
    // Identity restriction is a no-op.
    CHECK(restrict_permute_sign(r, id, id, ones) == r);
  }
}

TEST_CASE("noise_shift examples and inverse") {
  CHECK(noise_shift(MomentMatrix(3), Rational(1, 4)) == MomentMatrix(3));
  auto h = noise_shift(all_ones(2), Rational(1, 2));
  CHECK(h(0, 0) == 1);
  CHECK(h(0, 1) == Rational(1, 2));
  CHECK(h(1, 2) == Rational(1, 2));
  CHECK_THROWS_AS(noise_shift(MomentMatrix(2), Rational(0)), Error);
  CHECK_THROWS_AS(noise_shift(MomentMatrix(2), Rational(1)), Error);
  Rng rng = make_rng(5, 0);
  for (int trial = 0; trial < 50; ++trial) {
    MomentMatrix z = moments_of(random_distribution(3, all_points(3), rng));
    Rational delta = Rational(1 + static_cast<long>(rng() % 9)) / 10;
    CHECK(noise_unshift(noise_shift(z, delta), delta) == z);
  }
}

TEST_CASE("covariance_of and the delta eigenvalue floor") {
  auto id = covariance_of(MomentMatrix(3));
  CHECK(id.sigma.isApprox(Eigen::MatrixXd::Identity(3, 3)));
  CHECK(id.mean.isZero());
  auto pm = covariance_of(all_ones(2));
  CHECK(pm.sigma.isZero());
  CHECK(pm.mean.isApprox(Eigen::VectorXd::Ones(2)));
  Rng rng = make_rng(6, 0);
  for (int trial = 0; trial < 50; ++trial) {
    auto pts = all_points(3);
    std::shuffle(pts.begin(), pts.end(), rng);
    pts.resize(1 + rng() % 3);
    MomentMatrix z = moments_of(random_distribution(3, pts, rng));
    const Rational delta(1, 5);
    CHECK(covariance_of(noise_shift(z, delta)).min_eigenvalue >= 0.2 - 1e-12);
  }
}

TEST_CASE("pairwise_independent_point") {
  auto par = pairwise_independent_point(predicates::parity(3));
  REQUIRE(par.has_value());
  CHECK(*par == CubeDistribution::uniform_over(3, predicates::parity(3).satisfying()));
  CHECK(moments_of(*par) == MomentMatrix(3));
  CHECK_FALSE(pairwise_independent_point(predicates::majority(3)).has_value());
  auto one = pairwise_independent_point(predicates::constant_one(3));
  REQUIRE(one.has_value());
  CHECK(*one == CubeDistribution::uniform(3));
  // Whatever is returned must have identity moments.
  for (int k = 2; k <= 4; ++k) {
    auto p = pairwise_independent_point(predicates::parity(k));
    if (p) CHECK(moments_of(*p) == MomentMatrix(k));
  }
  // 2LIN forces perfect correlation.
  CHECK_FALSE(pairwise_independent_point(predicates::two_lin()).has_value());
}

TEST_CASE("moment matrix JSON round trip") {
  Rng rng = make_rng(8, 0);
  MomentMatrix z = moments_of(random_distribution(3, all_points(3), rng));
  CHECK(parse_moment_matrix(serialize_moment_matrix(z)) == z);
  CHECK_THROWS_AS(parse_moment_matrix("[[1, 0], [1]]"), Error);
}
