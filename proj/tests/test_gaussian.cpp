#include <cmath>
#include <numbers>

#include "doctest.h"
#include "reslab/gaussian.hpp"

using namespace reslab;

namespace {

MomentMatrix point_mass_moments(int k) {
  return MomentMatrix(k, std::vector<Rational>((k + 1) * (k + 1), Rational(1)));
}

// Independent 1-d normal density.
double phi(double x, double mu, double var) {
  return std::exp(-(x - mu) * (x - mu) / (2 * var)) / std::sqrt(2 * std::numbers::pi * var);
}

}  // namespace

TEST_CASE("cholesky examples") {
  CHECK(cholesky(Eigen::MatrixXd::Identity(3, 3)).isApprox(Eigen::MatrixXd::Identity(3, 3)));
  Eigen::MatrixXd s(2, 2);
  s << 1, 0.5, 0.5, 1;
  Eigen::MatrixXd l = cholesky(s);
  CHECK(l(0, 0) == doctest::Approx(1));
  CHECK(l(0, 1) == 0);
  CHECK(l(1, 0) == doctest::Approx(0.5));
  CHECK(l(1, 1) == doctest::Approx(std::sqrt(3.0) / 2));
  Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(2, 2);
  CHECK_THROWS_WITH_AS(cholesky(ones), doctest::Contains("pivot 1"), Error);
}

TEST_CASE("cholesky reconstructs random SPD matrices") {
  Rng rng = make_rng(31, 0);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 100; ++trial) {
    const int t = 1 + static_cast<int>(rng() % 6);
    Eigen::MatrixXd a(t, t);
    for (int i = 0; i < t; ++i) {
      for (int j = 0; j < t; ++j) a(i, j) = n(rng);
    }
    Eigen::MatrixXd s = a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(t, t);
    Eigen::MatrixXd l = cholesky(s);
    CHECK((l * l.transpose() - s).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(l.isLowerTriangular());
  }
}

TEST_CASE("sampler moments") {
  // Identity covariance: empirical correlations near 0 over 10^6 draws.
  GaussianProcessSpec spec = GaussianProcessSpec::from_moments(MomentMatrix(3), 1);
  Rng rng = make_rng(32, 0);
  const int n = 1000000;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(3, 3);
  for (int s = 0; s < n; ++s) {
    Eigen::MatrixXd y = sample_gaussians(spec, rng);
    sum += y * y.transpose();
  }
  sum /= n;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i != j) CHECK(std::abs(sum(i, j)) < 0.01);
    }
  }
  // Shifted point mass: mean 1 - delta per coordinate.
  GaussianProcessSpec shifted =
      GaussianProcessSpec::from_moments(noise_shift(point_mass_moments(2), Rational(1, 4)), 2);
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(2, 2);
  for (int s = 0; s < 200000; ++s) mean += sample_gaussians(shifted, rng);
  mean /= 200000;
  CHECK((mean.array() - 0.75).abs().maxCoeff() < 0.01);
  // Determinism under a fixed seed.
  CHECK(sample_gaussians(shifted, 99) == sample_gaussians(shifted, 99));
}

TEST_CASE("density values") {
  Eigen::MatrixXd zero1 = Eigen::MatrixXd::Zero(1, 1);
  CHECK(gaussian_density(zero1, MomentMatrix(1)) ==
        doctest::Approx(0.3989422804).epsilon(1e-9));
  Eigen::MatrixXd zero2 = Eigen::MatrixXd::Zero(1, 2);
  CHECK(gaussian_density(zero2, MomentMatrix(1)) ==
        doctest::Approx(1 / (2 * std::numbers::pi)).epsilon(1e-12));
  CHECK_THROWS_AS(gaussian_density(zero1, point_mass_moments(1)), Error);

  // Bivariate density against the product of a marginal and a conditional.
  Rng rng = make_rng(33, 0);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  for (int trial = 0; trial < 50; ++trial) {
    const double rho = u(rng), m0 = u(rng), m1 = u(rng);
    // zeta with biases m0, m1 and E[x1 x2] = rho + m0 m1.
    Rational r0 = parse_rational(std::to_string(m0)), r1 = parse_rational(std::to_string(m1));
    Rational c = parse_rational(std::to_string(rho)) + r0 * r1;
    MomentMatrix z(2, {1, r0, r1, r0, 1, c, r1, c, 1});
    Covariance cov = covariance_of(z);
    Eigen::MatrixXd y(2, 1);
    y << u(rng), u(rng);
    const double s00 = cov.sigma(0, 0), s11 = cov.sigma(1, 1), s01 = cov.sigma(0, 1);
    const double mu0 = cov.mean(0), mu1 = cov.mean(1);
    const double oracle = phi(y(0), mu0, s00) *
                          phi(y(1), mu1 + s01 / s00 * (y(0) - mu0), s11 - s01 * s01 / s00);
    CHECK(gaussian_density(y, z) == doctest::Approx(oracle).epsilon(1e-10));
  }
}

TEST_CASE("density permutation equivariance") {
  Rng rng = make_rng(34, 0);
  std::normal_distribution<double> n;
  MomentMatrix z = noise_shift(
      MomentMatrix(3, {1, Rational(1, 3), Rational(-1, 5), Rational(1, 7), Rational(1, 3), 1,
                       Rational(1, 4), Rational(-1, 6), Rational(-1, 5), Rational(1, 4), 1,
                       Rational(1, 9), Rational(1, 7), Rational(-1, 6), Rational(1, 9), 1}),
      Rational(1, 4));
  std::vector<int> perm = {2, 0, 1};
  // Row i of the permuted matrix is row perm[i]; feed the points in that order.
  MomentMatrix zp = restrict_permute_sign(z, {0, 1, 2}, perm, {1, 1, 1});
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd y(3, 4);
    for (int i = 0; i < 3; ++i) {
      for (int l = 0; l < 4; ++l) y(i, l) = n(rng);
    }
    Eigen::MatrixXd yp(3, 4);
    for (int i = 0; i < 3; ++i) yp.row(i) = y.row(perm[i]);
    CHECK(gaussian_density(yp, zp) == doctest::Approx(gaussian_density(y, z)).epsilon(1e-10));
  }
}

TEST_CASE("cells: examples, mirror, refinement, volumes") {
  double half = 0.5, out = 2.0;
  CHECK(cell_index(&half, 1, 0) == CellId{1});
  Eigen::VectorXd far(2);
  far << 2.0, 0.0;
  CHECK_FALSE(cell_index(far, 0).has_value());
  CHECK_FALSE(cell_index(&out, 1, 3).has_value());
  CHECK(num_cells(3, 1) == 64);

  Rng rng = make_rng(35, 0);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 1000; ++trial) {
    const int d = 1 + static_cast<int>(rng() % 4);
    const int q = static_cast<int>(rng() % 3);
    Eigen::VectorXd y(d);
    for (int l = 0; l < d; ++l) y(l) = u(rng);
    auto c = cell_index(y, q);
    REQUIRE(c.has_value());
    auto m = cell_index(Eigen::VectorXd(-y), q);
    REQUIRE(m.has_value());
    CHECK(*m == mirror_cell(*c, d, q));
    CHECK(is_canonical_cell(*c, d, q) != is_canonical_cell(*m, d, q));
    // Level q cell is determined by the level q+1 cell.
    auto fine = cell_index(y, q + 1);
    CHECK(coarsen_cell(*fine, d, q) == *c);
    // The point lies within half a width of its cell center.
    Eigen::VectorXd center = cell_center(*c, d, q);
    CHECK((center - y).cwiseAbs().maxCoeff() <= 1.0 / (1 << (q + 1)) + 1e-12);
    CHECK(cell_index(center, q) == c);
  }
  // Equal volumes summing to 2^d: count centers, each cell visited once.
  for (int d = 1; d <= 3; ++d) {
    for (int q = 0; q <= 2; ++q) {
      std::vector<int> hits(num_cells(d, q), 0);
      for (CellId id = 0; id < num_cells(d, q); ++id) ++hits[*cell_index(cell_center(id, d, q), q)];
      for (int h : hits) CHECK(h == 1);
      const double width = 2.0 / cells_per_axis(q);
      CHECK(static_cast<double>(num_cells(d, q)) * std::pow(width, d) == doctest::Approx(1 << d));
    }
  }
}

TEST_CASE("psi evaluation") {
  PartitionedFunction zero(1, 2);
  double y[2] = {0.3, -0.8};
  CHECK(zero.eval(y) == 0);
  CHECK(zero.is_zero());
  PartitionedFunction psi(1, 2);
  CellId c = *cell_index(y, 2, 1);
  psi.set_cell(c, 1);
  CHECK(psi.eval(y) == 1);
  Eigen::VectorXd mirror_center = cell_center(mirror_cell(c, 2, 1), 2, 1);
  CHECK(psi.eval(mirror_center) == -1);
  double outside[2] = {1.5, 0};
  CHECK(psi.eval(outside) == 0);
  CHECK_THROWS_AS(psi.set_slot(0, 2), Error);

  Rng rng = make_rng(36, 0);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  PartitionedFunction r(1, 3);
  for (std::size_t s = 0; s < r.num_canonical(); ++s) r.set_slot(s, static_cast<int>(rng() % 3) - 1);
  PartitionedFunction fine = r.refine();
  for (int trial = 0; trial < 2000; ++trial) {
    Eigen::VectorXd v(3);
    for (int l = 0; l < 3; ++l) v(l) = u(rng);
    CHECK(r.eval(Eigen::VectorXd(-v)) == -r.eval(v));
    CHECK(fine.eval(v) == r.eval(v));
  }
  for (std::size_t s = 0; s < r.num_canonical(); ++s) {
    CHECK(r.canonical_slot(r.canonical_cell(s)) == s);
    CHECK(is_canonical_cell(r.canonical_cell(s), 3, 1));
  }
  CHECK(parse_psi(serialize_psi(r)) == r);
  CHECK(parse_psi(serialize_psi(fine)) == fine);
  CHECK_THROWS_AS(parse_psi("{\"q\": 0, \"d\": 1}"), Error);
}
