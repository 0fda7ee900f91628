#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "reslab/predicate.hpp"
#include "reslab/rational.hpp"

namespace reslab {

// Probability distribution on {-1,1}^k, dense over assignment indices.
class CubeDistribution {
 public:
  CubeDistribution() = default;
  CubeDistribution(int k, std::vector<Rational> probs);  // validates normalization

  static CubeDistribution point_mass(int k, Assignment x);
  static CubeDistribution uniform(int k);
  static CubeDistribution uniform_over(int k, const std::vector<Assignment>& support);

  int arity() const { return k_; }
  const Rational& operator[](Assignment x) const { return probs_[x]; }
  const std::vector<Rational>& probs() const { return probs_; }
  std::vector<Assignment> support() const;
  bool supported_on(const Predicate& f) const;

  // E[x_i], 0-based coordinate.
  Rational bias(int i) const;
  Rational correlation(int i, int j) const;
  // Convex combination (1-w) * this + w * other.
  CubeDistribution mix(const CubeDistribution& other, const Rational& w) const;

  bool operator==(const CubeDistribution& o) const { return k_ == o.k_ && probs_ == o.probs_; }

 private:
  int k_ = 0;
  std::vector<Rational> probs_;
};

// Symmetric (t+1)x(t+1) matrix; row/column 0 carries the biases.
class MomentMatrix {
 public:
  MomentMatrix() = default;
  explicit MomentMatrix(int t);  // identity
  MomentMatrix(int t, std::vector<Rational> entries);  // validates unit diagonal, symmetry

  int arity() const { return t_; }
  int dim() const { return t_ + 1; }
  const Rational& operator()(int i, int j) const { return entries_[i * dim() + j]; }
  const std::vector<Rational>& entries() const { return entries_; }

  // Upper triangle above the diagonal, row-major; exact grouping key.
  std::vector<Rational> key() const;
  Eigen::MatrixXd to_eigen() const;

  bool operator==(const MomentMatrix& o) const { return t_ == o.t_ && entries_ == o.entries_; }
  bool operator<(const MomentMatrix& o) const;

 private:
  void set(int i, int j, const Rational& v) {
    entries_[i * dim() + j] = v;
    entries_[j * dim() + i] = v;
  }
  friend MomentMatrix moments_of(const CubeDistribution&);
  friend MomentMatrix restrict_permute_sign(const MomentMatrix&, const std::vector<int>&,
                                            const std::vector<int>&, const std::vector<int>&);

  int t_ = 0;
  std::vector<Rational> entries_;
};

using BiasVector = std::vector<Rational>;

MomentMatrix moments_of(const CubeDistribution& nu);
BiasVector biases_of(const CubeDistribution& nu);

// zeta_{S,pi,b}. subset lists 0-based coordinates; output row i+1 is row
// subset[perm[i]] + 1 of zeta, then entrywise times (1 b)(1 b)^T.
MomentMatrix restrict_permute_sign(const MomentMatrix& zeta, const std::vector<int>& subset,
                                   const std::vector<int>& perm, const std::vector<int>& signs);

// (1-delta) zeta + delta I, delta in (0,1).
MomentMatrix noise_shift(const MomentMatrix& zeta, const Rational& delta);
MomentMatrix noise_unshift(const MomentMatrix& zeta, const Rational& delta);

struct Covariance {
  Eigen::MatrixXd sigma;
  Eigen::VectorXd mean;
  double min_eigenvalue = 0;
};
Covariance covariance_of(const MomentMatrix& zeta);

// Exact PSD test by symmetric Gaussian elimination over the rationals.
bool is_psd_exact(const MomentMatrix& zeta);

// A distribution on f^{-1}(1) with zero biases and correlations, if any.
std::optional<CubeDistribution> pairwise_independent_point(const Predicate& f);

std::string serialize_moment_matrix(const MomentMatrix& zeta);
MomentMatrix parse_moment_matrix(std::string_view text);

}  // namespace reslab
