#include "reslab/moment.hpp"

#include <algorithm>

#include "json.hpp"
#include "reslab/lp.hpp"

namespace reslab {

CubeDistribution::CubeDistribution(int k, std::vector<Rational> probs)
    : k_(k), probs_(std::move(probs)) {
  if (k < 1 || k > kMaxArity) throw Error("distribution arity out of range");
  if (probs_.size() != (std::size_t{1} << k)) throw Error("distribution needs 2^k weights");
  Rational total(0);
  for (const auto& p : probs_) {
    if (sgn(p) < 0) throw Error("negative probability");
    total += p;
  }
  if (total != 1) throw Error("distribution weights sum to " + total.get_str() + ", not 1");
}

CubeDistribution CubeDistribution::point_mass(int k, Assignment x) {
  std::vector<Rational> p(std::size_t{1} << k, Rational(0));
  if (x >= p.size()) throw Error("assignment out of range");
  p[x] = 1;
  return CubeDistribution(k, std::move(p));
}

CubeDistribution CubeDistribution::uniform(int k) {
  std::size_t n = std::size_t{1} << k;
  return CubeDistribution(k, std::vector<Rational>(n, Rational(1, static_cast<unsigned long>(n))));
}

CubeDistribution CubeDistribution::uniform_over(int k, const std::vector<Assignment>& support) {
  if (support.empty()) throw Error("empty support");
  std::vector<Rational> p(std::size_t{1} << k, Rational(0));
  Rational w(1, static_cast<unsigned long>(support.size()));
  for (Assignment x : support) {
    if (x >= p.size()) throw Error("assignment out of range");
    p[x] += w;
  }
  return CubeDistribution(k, std::move(p));
}

std::vector<Assignment> CubeDistribution::support() const {
  std::vector<Assignment> out;
  for (Assignment x = 0; x < probs_.size(); ++x) {
    if (sgn(probs_[x]) != 0) out.push_back(x);
  }
  return out;
}

bool CubeDistribution::supported_on(const Predicate& f) const {
  if (f.arity() != k_) return false;
  for (Assignment x = 0; x < probs_.size(); ++x) {
    if (sgn(probs_[x]) != 0 && !f(x)) return false;
  }
  return true;
}

Rational CubeDistribution::bias(int i) const {
  Rational e(0);
  for (Assignment x = 0; x < probs_.size(); ++x) {
    if (coordinate(x, i) > 0) {
      e += probs_[x];
    } else {
      e -= probs_[x];
    }
  }
  return e;
}

Rational CubeDistribution::correlation(int i, int j) const {
  Rational e(0);
  for (Assignment x = 0; x < probs_.size(); ++x) {
    if (coordinate(x, i) * coordinate(x, j) > 0) {
      e += probs_[x];
    } else {
      e -= probs_[x];
    }
  }
  return e;
}

CubeDistribution CubeDistribution::mix(const CubeDistribution& other, const Rational& w) const {
  if (other.k_ != k_) throw Error("mixing distributions of different arity");
  std::vector<Rational> p(probs_.size());
  for (std::size_t x = 0; x < p.size(); ++x) p[x] = (1 - w) * probs_[x] + w * other.probs_[x];
  return CubeDistribution(k_, std::move(p));
}

MomentMatrix::MomentMatrix(int t) : t_(t), entries_((t + 1) * (t + 1), Rational(0)) {
  for (int i = 0; i <= t; ++i) entries_[i * dim() + i] = 1;
}

MomentMatrix::MomentMatrix(int t, std::vector<Rational> entries)
    : t_(t), entries_(std::move(entries)) {
  if (t < 1) throw Error("moment matrix arity must be positive");
  if (entries_.size() != static_cast<std::size_t>(dim() * dim())) {
    throw Error("moment matrix has the wrong number of entries");
  }
  for (int i = 0; i < dim(); ++i) {
    if ((*this)(i, i) != 1) throw Error("moment matrix diagonal must be 1");
    for (int j = 0; j < i; ++j) {
      if ((*this)(i, j) != (*this)(j, i)) throw Error("moment matrix must be symmetric");
      if (abs((*this)(i, j)) > 1) throw Error("moment matrix entry exceeds 1 in magnitude");
    }
  }
}

std::vector<Rational> MomentMatrix::key() const {
  std::vector<Rational> out;
  out.reserve(dim() * t_ / 2);
  for (int i = 0; i < dim(); ++i) {
    for (int j = i + 1; j < dim(); ++j) out.push_back((*this)(i, j));
  }
  return out;
}

Eigen::MatrixXd MomentMatrix::to_eigen() const {
  Eigen::MatrixXd m(dim(), dim());
  for (int i = 0; i < dim(); ++i) {
    for (int j = 0; j < dim(); ++j) m(i, j) = to_double((*this)(i, j));
  }
  return m;
}

bool MomentMatrix::operator<(const MomentMatrix& o) const {
  if (t_ != o.t_) return t_ < o.t_;
  return entries_ < o.entries_;
}

MomentMatrix moments_of(const CubeDistribution& nu) {
  const int k = nu.arity();
  MomentMatrix m(k);
  for (int i = 1; i <= k; ++i) {
    m.set(0, i, nu.bias(i - 1));
    for (int j = i + 1; j <= k; ++j) m.set(i, j, nu.correlation(i - 1, j - 1));
  }
  return m;
}

BiasVector biases_of(const CubeDistribution& nu) {
  BiasVector b(nu.arity());
  for (int i = 0; i < nu.arity(); ++i) b[i] = nu.bias(i);
  return b;
}

MomentMatrix restrict_permute_sign(const MomentMatrix& zeta, const std::vector<int>& subset,
                                   const std::vector<int>& perm, const std::vector<int>& signs) {
  const int t = static_cast<int>(subset.size());
  if (t == 0) throw Error("restriction needs a nonempty subset");
  if (static_cast<int>(perm.size()) != t || static_cast<int>(signs.size()) != t) {
    throw Error("permutation and signs must match the subset size");
  }
  std::vector<char> seen(t, 0);
  for (int p : perm) {
    if (p < 0 || p >= t || seen[p]) throw Error("perm is not a bijection on the subset");
    seen[p] = 1;
  }
  std::vector<int> rows(t + 1, 0);  // source rows in zeta
  std::vector<int> sign(t + 1, 1);
  for (int i = 0; i < t; ++i) {
    int c = subset[perm[i]];
    if (c < 0 || c >= zeta.arity()) throw Error("subset index out of range");
    if (signs[i] != 1 && signs[i] != -1) throw Error("signs must be +1 or -1");
    rows[i + 1] = c + 1;
    sign[i + 1] = signs[i];
  }
  MomentMatrix out(t);
  for (int i = 0; i <= t; ++i) {
    for (int j = i + 1; j <= t; ++j) {
      const Rational& v = zeta(rows[i], rows[j]);
      out.set(i, j, sign[i] * sign[j] > 0 ? v : Rational(-v));
    }
  }
  return out;
}

MomentMatrix noise_shift(const MomentMatrix& zeta, const Rational& delta) {
  if (sgn(delta) <= 0 || delta >= 1) throw Error("noise shift delta must lie in (0,1)");
  std::vector<Rational> e(zeta.entries().size());
  for (int i = 0; i < zeta.dim(); ++i) {
    for (int j = 0; j < zeta.dim(); ++j) {
      e[i * zeta.dim() + j] = (1 - delta) * zeta(i, j) + (i == j ? delta : Rational(0));
    }
  }
  return MomentMatrix(zeta.arity(), std::move(e));
}

MomentMatrix noise_unshift(const MomentMatrix& zeta, const Rational& delta) {
  if (sgn(delta) <= 0 || delta >= 1) throw Error("noise shift delta must lie in (0,1)");
  std::vector<Rational> e(zeta.entries().size());
  for (int i = 0; i < zeta.dim(); ++i) {
    for (int j = 0; j < zeta.dim(); ++j) {
      e[i * zeta.dim() + j] = (zeta(i, j) - (i == j ? delta : Rational(0))) / (1 - delta);
    }
  }
  return MomentMatrix(zeta.arity(), std::move(e));
}

Covariance covariance_of(const MomentMatrix& zeta) {
  const int t = zeta.arity();
  Covariance c;
  c.mean.resize(t);
  c.sigma.resize(t, t);
  for (int i = 0; i < t; ++i) c.mean(i) = to_double(zeta(0, i + 1));
  for (int i = 0; i < t; ++i) {
    for (int j = 0; j < t; ++j) {
      c.sigma(i, j) = to_double(zeta(i + 1, j + 1) - zeta(0, i + 1) * zeta(0, j + 1));
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.sigma, Eigen::EigenvaluesOnly);
  c.min_eigenvalue = es.eigenvalues().minCoeff();
  return c;
}

bool is_psd_exact(const MomentMatrix& zeta) {
  const int n = zeta.dim();
  std::vector<std::vector<Rational>> a(n, std::vector<Rational>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a[i][j] = zeta(i, j);
  }
  std::vector<char> active(n, 1);
  for (int step = 0; step < n; ++step) {
    int p = -1;
    for (int i = 0; i < n; ++i) {
      if (!active[i]) continue;
      if (sgn(a[i][i]) < 0) return false;
      if (sgn(a[i][i]) > 0 && p < 0) p = i;
    }
    if (p < 0) {
      // All remaining diagonals vanish; PSD forces the block to be zero.
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          if (active[i] && active[j] && sgn(a[i][j]) != 0) return false;
        }
      }
      return true;
    }
    active[p] = 0;
    for (int i = 0; i < n; ++i) {
      if (!active[i] || sgn(a[i][p]) == 0) continue;
      Rational f = a[i][p] / a[p][p];
      for (int j = 0; j < n; ++j) {
        if (active[j]) a[i][j] -= f * a[p][j];
      }
    }
  }
  return true;
}

std::optional<CubeDistribution> pairwise_independent_point(const Predicate& f) {
  const int k = f.arity();
  auto sat = f.satisfying();
  if (sat.empty()) throw Error("predicate has no satisfying assignment");
  // Among feasible points, maximize the smallest weight; this returns the
  // uniform distribution on f^{-1}(1) whenever that one qualifies.
  LinearProgram lp;
  for (std::size_t a = 0; a < sat.size(); ++a) lp.add_variable();
  int s = lp.add_variable(Rational(0), std::nullopt, Rational(1));
  std::vector<std::pair<int, Rational>> norm;
  for (std::size_t a = 0; a < sat.size(); ++a) {
    norm.push_back({static_cast<int>(a), Rational(1)});
    lp.add_constraint({{static_cast<int>(a), Rational(1)}, {s, Rational(-1)}},
                      Relation::kGreaterEqual, 0);
  }
  lp.add_constraint(norm, Relation::kEqual, 1);
  for (int i = 0; i < k; ++i) {
    std::vector<std::pair<int, Rational>> row;
    for (std::size_t a = 0; a < sat.size(); ++a) {
      row.push_back({static_cast<int>(a), Rational(coordinate(sat[a], i))});
    }
    lp.add_constraint(row, Relation::kEqual, 0);
    for (int j = i + 1; j < k; ++j) {
      std::vector<std::pair<int, Rational>> corr;
      for (std::size_t a = 0; a < sat.size(); ++a) {
        corr.push_back({static_cast<int>(a),
                        Rational(coordinate(sat[a], i) * coordinate(sat[a], j))});
      }
      lp.add_constraint(corr, Relation::kEqual, 0);
    }
  }
  auto res = lp_solve(lp);
  if (res.status != LpStatus::kOptimal) return std::nullopt;
  std::vector<Rational> p(f.table_size(), Rational(0));
  for (std::size_t a = 0; a < sat.size(); ++a) p[sat[a]] = res.primal[a];
  return CubeDistribution(k, std::move(p));
}

std::string serialize_moment_matrix(const MomentMatrix& zeta) {
  nlohmann::json j = nlohmann::json::array();
  for (int i = 0; i < zeta.dim(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < zeta.dim(); ++c) row.push_back(zeta(i, c).get_str());
    j.push_back(row);
  }
  return j.dump();
}

MomentMatrix parse_moment_matrix(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("moment matrix is not valid JSON: ") + e.what());
  }
  if (!j.is_array() || j.size() < 2) throw Error("moment matrix must be an array of rows");
  const std::size_t n = j.size();
  std::vector<Rational> e;
  for (const auto& row : j) {
    if (!row.is_array() || row.size() != n) throw Error("moment matrix must be square");
    for (const auto& v : row) {
      if (!v.is_string()) throw Error("moment matrix entries must be rational strings");
      e.push_back(parse_rational(v.get<std::string>()));
    }
  }
  return MomentMatrix(static_cast<int>(n) - 1, std::move(e));
}

}  // namespace reslab
