#include "reslab/lp.hpp"

#include <cmath>
#include <sstream>

namespace reslab {

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::kOptimal: return "optimal";
    case LpStatus::kInfeasible: return "infeasible";
    case LpStatus::kUnbounded: return "unbounded";
  }
  return "?";
}

const char* to_string(Backend backend) {
  return backend == Backend::kExactRational ? "exact-rational" : "float";
}

template <class T>
int BasicLinearProgram<T>::add_variable(std::optional<T> lo, std::optional<T> hi, T cost) {
  lower.resize(num_vars, T(0));
  upper.resize(num_vars);
  objective.resize(num_vars, T(0));
  lower.push_back(std::move(lo));
  upper.push_back(std::move(hi));
  objective.push_back(std::move(cost));
  return num_vars++;
}

template <class T>
void BasicLinearProgram<T>::add_constraint(std::vector<std::pair<int, T>> terms, Relation rel,
                                           T rhs) {
  constraints.push_back({std::move(terms), rel, std::move(rhs)});
}

namespace {

std::string scalar_text(const Rational& v) { return v.get_str(); }
std::string scalar_text(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

const char* relation_text(Relation rel) {
  switch (rel) {
    case Relation::kLessEqual: return "<=";
    case Relation::kEqual: return "=";
    case Relation::kGreaterEqual: return ">=";
  }
  return "?";
}

}  // namespace

template <class T>
std::string BasicLinearProgram<T>::dump() const {
  std::ostringstream os;
  os << "max:";
  for (int j = 0; j < num_vars; ++j) {
    if (j < static_cast<int>(objective.size()) && objective[j] != T(0)) {
      os << " + " << scalar_text(objective[j]) << " x" << j;
    }
  }
  os << "\n";
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    os << "c" << i << ":";
    for (const auto& [j, a] : constraints[i].terms) os << " + " << scalar_text(a) << " x" << j;
    os << " " << relation_text(constraints[i].relation) << " " << scalar_text(constraints[i].rhs)
       << "\n";
  }
  for (int j = 0; j < num_vars; ++j) {
    std::optional<T> lo = j < static_cast<int>(lower.size()) ? lower[j] : std::optional<T>(T(0));
    std::optional<T> hi;
    if (j < static_cast<int>(upper.size())) hi = upper[j];
    os << "bound x" << j << ": " << (lo ? scalar_text(*lo) : "-inf") << " .. "
       << (hi ? scalar_text(*hi) : "+inf") << "\n";
  }
  return os.str();
}

namespace {

template <class T>
struct Arith;

template <>
struct Arith<Rational> {
  static constexpr Backend kBackend = Backend::kExactRational;
  double tol = 0;
  bool zero(const Rational& v) const { return sgn(v) == 0; }
  bool pos(const Rational& v) const { return sgn(v) > 0; }
  bool neg(const Rational& v) const { return sgn(v) < 0; }
  void clean(Rational&) const {}
  // Bland: lowest basic index among exact ties.
  bool prefer(const Rational&, const Rational&, int bi, int bp, bool) const { return bi < bp; }
};

template <>
struct Arith<double> {
  static constexpr Backend kBackend = Backend::kFloat;
  double tol = 1e-9;
  bool zero(double v) const { return std::fabs(v) <= tol; }
  bool pos(double v) const { return v > tol; }
  bool neg(double v) const { return v < -tol; }
  void clean(double& v) const {
    if (std::fabs(v) <= tol * 1e-3) v = 0;
  }
  // Among near-ties take the largest pivot element, since tiny pivots wreck
  // the tableau. That rule can cycle, so long runs fall back to Bland.
  bool prefer(double ai, double ap, int bi, int bp, bool bland) const {
    if (bland) return bi < bp;
    return ai > ap || (ai == ap && bi < bp);
  }
};

template <class T>
std::optional<T> bound_at(const std::vector<std::optional<T>>& v, int j, std::optional<T> dflt) {
  return j < static_cast<int>(v.size()) ? v[j] : dflt;
}

// Dense two-phase tableau simplex with Bland's rule.
template <class T>
class Tableau {
 public:
  Tableau(const BasicLinearProgram<T>& lp, const SolveOptions& options)
      : lp_(lp), options_(options) {
    arith_.tol = options.tolerance;
  }

  LpResult<T> solve();

 private:
  struct VarMap {
    T offset{};
    std::vector<std::pair<int, int>> cols;  // (column, +1/-1)
  };

  void standardize();
  void pivot(int p, int q);
  // Returns false on unboundedness.
  bool run(bool phase_one);
  bool allowed(int col, bool phase_one) const { return phase_one || !is_art_[col]; }

  const BasicLinearProgram<T>& lp_;
  SolveOptions options_;
  Arith<T> arith_;

  std::vector<VarMap> var_map_;
  int num_struct_ = 0;
  int num_cols_ = 0;
  int num_orig_rows_ = 0;
  std::vector<std::vector<T>> rows_;  // m x (num_cols_ + 1)
  std::vector<T> cost_;               // reduced costs, last entry = -objective
  std::vector<int> basis_;
  std::vector<int> unit_col_;
  std::vector<char> is_art_;
  std::vector<char> negated_;
  std::vector<std::vector<std::pair<int, T>>> std_rows_;
  std::vector<Relation> std_rel_;
  std::vector<T> std_rhs_;
  long pivots_ = 0;
  bool box_empty_ = false;
};

template <class T>
void Tableau<T>::standardize() {
  const int n = lp_.num_vars;
  var_map_.resize(n);
  std::vector<std::pair<int, T>> bound_rows;  // (column, width)
  for (int j = 0; j < n; ++j) {
    auto lo = bound_at(lp_.lower, j, std::optional<T>(T(0)));
    auto hi = bound_at(lp_.upper, j, std::optional<T>());
    VarMap& vm = var_map_[j];
    if (lo) {
      vm.offset = *lo;
      int c = num_struct_++;
      vm.cols.push_back({c, 1});
      if (hi) {
        T width = *hi - *lo;
        if (arith_.neg(width)) box_empty_ = true;
        bound_rows.push_back({c, width});
      }
    } else if (hi) {
      vm.offset = *hi;
      vm.cols.push_back({num_struct_++, -1});
    } else {
      vm.offset = T(0);
      vm.cols.push_back({num_struct_++, 1});
      vm.cols.push_back({num_struct_++, -1});
    }
  }

  num_orig_rows_ = static_cast<int>(lp_.constraints.size());
  for (const auto& con : lp_.constraints) {
    std::vector<T> dense(num_struct_, T(0));
    T rhs = con.rhs;
    for (const auto& [j, a] : con.terms) {
      if (j < 0 || j >= n) throw Error("constraint references variable out of range");
      rhs -= a * var_map_[j].offset;
      for (auto [c, s] : var_map_[j].cols) {
        if (s > 0) {
          dense[c] += a;
        } else {
          dense[c] -= a;
        }
      }
    }
    std::vector<std::pair<int, T>> sparse;
    for (int c = 0; c < num_struct_; ++c) {
      if (!arith_.zero(dense[c])) sparse.push_back({c, dense[c]});
    }
    std_rows_.push_back(std::move(sparse));
    std_rel_.push_back(con.relation);
    std_rhs_.push_back(rhs);
  }
  for (auto& [c, width] : bound_rows) {
    std_rows_.push_back({{c, T(1)}});
    std_rel_.push_back(Relation::kLessEqual);
    std_rhs_.push_back(width);
  }

  const int m = static_cast<int>(std_rows_.size());
  negated_.assign(m, 0);
  for (int i = 0; i < m; ++i) {
    if (arith_.neg(std_rhs_[i])) {
      negated_[i] = 1;
      std_rhs_[i] = -std_rhs_[i];
      for (auto& term : std_rows_[i]) term.second = -term.second;
      if (std_rel_[i] == Relation::kLessEqual) {
        std_rel_[i] = Relation::kGreaterEqual;
      } else if (std_rel_[i] == Relation::kGreaterEqual) {
        std_rel_[i] = Relation::kLessEqual;
      }
    }
  }

  num_cols_ = num_struct_;
  std::vector<int> slack(m, -1), art(m, -1);
  for (int i = 0; i < m; ++i) {
    if (std_rel_[i] != Relation::kEqual) slack[i] = num_cols_++;
    if (std_rel_[i] != Relation::kLessEqual) art[i] = num_cols_++;
  }
  is_art_.assign(num_cols_, 0);
  rows_.assign(m, std::vector<T>(num_cols_ + 1, T(0)));
  basis_.assign(m, -1);
  unit_col_.assign(m, -1);
  for (int i = 0; i < m; ++i) {
    for (const auto& [c, a] : std_rows_[i]) rows_[i][c] = a;
    rows_[i][num_cols_] = std_rhs_[i];
    if (std_rel_[i] == Relation::kLessEqual) {
      rows_[i][slack[i]] = T(1);
      basis_[i] = slack[i];
      unit_col_[i] = slack[i];
    } else {
      if (slack[i] >= 0) rows_[i][slack[i]] = T(-1);
      rows_[i][art[i]] = T(1);
      is_art_[art[i]] = 1;
      basis_[i] = art[i];
      unit_col_[i] = art[i];
    }
  }
}

template <class T>
void Tableau<T>::pivot(int p, int q) {
  ++pivots_;
  std::vector<T>& prow = rows_[p];
  T inv = T(1) / prow[q];
  std::vector<int> nz;
  for (int j = 0; j <= num_cols_; ++j) {
    if (!arith_.zero(prow[j])) {
      prow[j] *= inv;
      nz.push_back(j);
    } else {
      prow[j] = T(0);
    }
  }
  prow[q] = T(1);
  auto eliminate = [&](std::vector<T>& row) {
    if (arith_.zero(row[q])) return;
    T f = row[q];
    for (int j : nz) {
      row[j] -= f * prow[j];
      arith_.clean(row[j]);
    }
    row[q] = T(0);
  };
  for (int i = 0; i < static_cast<int>(rows_.size()); ++i) {
    if (i != p) eliminate(rows_[i]);
  }
  eliminate(cost_);
  basis_[p] = q;
}

template <class T>
bool Tableau<T>::run(bool phase_one) {
  const int m = static_cast<int>(rows_.size());
  const long start = pivots_;
  const long bland_after = 10L * (m + num_cols_);
  while (true) {
    const bool bland = pivots_ - start > bland_after;
    if (options_.max_pivots >= 0 && pivots_ >= options_.max_pivots) {
      throw Error("simplex pivot limit reached");
    }
    int q = -1;
    for (int j = 0; j < num_cols_; ++j) {
      if (allowed(j, phase_one) && arith_.neg(cost_[j])) {
        q = j;
        break;
      }
    }
    if (q < 0) return true;
    int p = -1;
    T best{};
    for (int i = 0; i < m; ++i) {
      if (!arith_.pos(rows_[i][q])) continue;
      T ratio = rows_[i][num_cols_] / rows_[i][q];
      if (p < 0) {
        p = i;
        best = ratio;
        continue;
      }
      T diff = ratio - best;
      if (arith_.neg(diff)) {
        p = i;
        best = ratio;
      } else if (arith_.zero(diff) && arith_.prefer(rows_[i][q], rows_[p][q], basis_[i], basis_[p], bland)) {
        p = i;
        if (ratio < best) best = ratio;
      }
    }
    if (p < 0) return false;
    pivot(p, q);
  }
}

template <class T>
LpResult<T> Tableau<T>::solve() {
  LpResult<T> result;
  result.backend = Arith<T>::kBackend;
  if (static_cast<int>(lp_.objective.size()) > lp_.num_vars ||
      static_cast<int>(lp_.lower.size()) > lp_.num_vars ||
      static_cast<int>(lp_.upper.size()) > lp_.num_vars) {
    throw Error("linear program dimension mismatch");
  }
  standardize();
  if (box_empty_) {
    result.status = LpStatus::kInfeasible;
    result.farkas.assign(num_orig_rows_, T(0));
    return result;
  }
  const int m = static_cast<int>(rows_.size());

  // Phase one: minimize the sum of artificials.
  cost_.assign(num_cols_ + 1, T(0));
  for (int j = 0; j < num_cols_; ++j) {
    if (is_art_[j]) cost_[j] = T(1);
  }
  for (int i = 0; i < m; ++i) {
    if (!is_art_[basis_[i]]) continue;
    for (int j = 0; j <= num_cols_; ++j) {
      if (!arith_.zero(rows_[i][j])) cost_[j] -= rows_[i][j];
    }
  }
  run(true);
  T infeasibility = -cost_[num_cols_];
  if (arith_.pos(infeasibility)) {
    result.status = LpStatus::kInfeasible;
    result.farkas.assign(num_orig_rows_, T(0));
    for (int i = 0; i < num_orig_rows_; ++i) {
      int u = unit_col_[i];
      T y = (is_art_[u] ? T(1) : T(0)) - cost_[u];
      result.farkas[i] = negated_[i] ? T(-y) : y;
    }
    result.pivots = pivots_;
    return result;
  }

  // Drive artificials out of the basis where possible; rows where that fails
  // are redundant and stay at zero.
  for (int i = 0; i < m; ++i) {
    if (!is_art_[basis_[i]]) continue;
    for (int j = 0; j < num_cols_; ++j) {
      if (!is_art_[j] && !arith_.zero(rows_[i][j])) {
        pivot(i, j);
        break;
      }
    }
  }

  // Phase two: minimize -objective.
  std::vector<T> c2(num_cols_ + 1, T(0));
  for (int j = 0; j < lp_.num_vars; ++j) {
    if (j >= static_cast<int>(lp_.objective.size())) break;
    for (auto [c, s] : var_map_[j].cols) {
      c2[c] = s > 0 ? T(-lp_.objective[j]) : lp_.objective[j];
    }
  }
  cost_ = c2;
  for (int i = 0; i < m; ++i) {
    const T& cb = c2[basis_[i]];
    if (arith_.zero(cb)) continue;
    for (int j = 0; j <= num_cols_; ++j) {
      if (!arith_.zero(rows_[i][j])) cost_[j] -= cb * rows_[i][j];
    }
  }
  bool bounded = run(false);
  result.pivots = pivots_;
  if (!bounded) {
    result.status = LpStatus::kUnbounded;
    return result;
  }

  std::vector<T> xs(num_cols_, T(0));
  for (int i = 0; i < m; ++i) xs[basis_[i]] = rows_[i][num_cols_];
  result.status = LpStatus::kOptimal;
  result.primal.assign(lp_.num_vars, T(0));
  result.objective = T(0);
  for (int j = 0; j < lp_.num_vars; ++j) {
    T v = var_map_[j].offset;
    for (auto [c, s] : var_map_[j].cols) {
      if (s > 0) {
        v += xs[c];
      } else {
        v -= xs[c];
      }
    }
    result.primal[j] = v;
    if (j < static_cast<int>(lp_.objective.size())) result.objective += lp_.objective[j] * v;
  }
  result.dual.assign(num_orig_rows_, T(0));
  for (int i = 0; i < num_orig_rows_; ++i) {
    const T& y = cost_[unit_col_[i]];
    result.dual[i] = negated_[i] ? T(-y) : y;
  }
  return result;
}

}  // namespace

template <class T>
LpResult<T> lp_solve(const BasicLinearProgram<T>& lp, const SolveOptions& options) {
  Tableau<T> tableau(lp, options);
  return tableau.solve();
}

template <class T>
bool farkas_certifies(const BasicLinearProgram<T>& lp, const std::vector<T>& y, double tol) {
  if (y.size() != lp.constraints.size()) return false;
  Arith<T> arith;
  arith.tol = tol;
  for (int j = 0; j < lp.num_vars; ++j) {
    auto lo = bound_at(lp.lower, j, std::optional<T>(T(0)));
    auto hi = bound_at(lp.upper, j, std::optional<T>());
    if (lo && hi && arith.neg(*hi - *lo)) return true;  // empty box
  }
  std::vector<T> g(lp.num_vars, T(0));
  T h(0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto& con = lp.constraints[i];
    if (con.relation == Relation::kLessEqual && arith.pos(y[i])) return false;
    if (con.relation == Relation::kGreaterEqual && arith.neg(y[i])) return false;
    if (arith.zero(y[i])) continue;
    for (const auto& [j, a] : con.terms) g[j] += y[i] * a;
    h += y[i] * con.rhs;
  }
  T sup(0);
  for (int j = 0; j < lp.num_vars; ++j) {
    if (arith.zero(g[j])) continue;
    auto lo = bound_at(lp.lower, j, std::optional<T>(T(0)));
    auto hi = bound_at(lp.upper, j, std::optional<T>());
    if (arith.pos(g[j])) {
      if (!hi) return false;
      sup += g[j] * *hi;
    } else {
      if (!lo) return false;
      sup += g[j] * *lo;
    }
  }
  return arith.pos(h - sup);
}

template <class T>
GameSolution<T> game_value(const GameMatrix<T>& game, const SolveOptions& options) {
  if (game.rows <= 0 || game.cols <= 0) throw Error("empty game matrix");
  if (game.payoffs.size() != static_cast<std::size_t>(game.rows) * game.cols) {
    throw Error("game matrix size mismatch");
  }
  // Column player: maximize v s.t. (A q)_i >= v for every row, q a distribution.
  BasicLinearProgram<T> lp;
  for (int j = 0; j < game.cols; ++j) lp.add_variable(T(0), std::nullopt, T(0));
  int v = lp.add_variable(std::nullopt, std::nullopt, T(1));
  for (int i = 0; i < game.rows; ++i) {
    std::vector<std::pair<int, T>> terms;
    for (int j = 0; j < game.cols; ++j) {
      if (game.at(i, j) != T(0)) terms.push_back({j, game.at(i, j)});
    }
    terms.push_back({v, T(-1)});
    lp.add_constraint(std::move(terms), Relation::kGreaterEqual, T(0));
  }
  std::vector<std::pair<int, T>> simplex;
  for (int j = 0; j < game.cols; ++j) simplex.push_back({j, T(1)});
  lp.add_constraint(std::move(simplex), Relation::kEqual, T(1));

  LpResult<T> res = lp_solve(lp, options);
  if (res.status != LpStatus::kOptimal) throw Error("game LP did not reach an optimum");
  GameSolution<T> sol;
  sol.backend = res.backend;
  sol.value = res.primal[v];
  sol.col_strategy.assign(res.primal.begin(), res.primal.begin() + game.cols);
  sol.row_strategy.resize(game.rows);
  for (int i = 0; i < game.rows; ++i) sol.row_strategy[i] = -res.dual[i];
  return sol;
}

template struct BasicLinearProgram<Rational>;
template struct BasicLinearProgram<double>;
template LpResult<Rational> lp_solve(const BasicLinearProgram<Rational>&, const SolveOptions&);
template LpResult<double> lp_solve(const BasicLinearProgram<double>&, const SolveOptions&);
template bool farkas_certifies(const BasicLinearProgram<Rational>&, const std::vector<Rational>&,
                               double);
template bool farkas_certifies(const BasicLinearProgram<double>&, const std::vector<double>&,
                               double);
template GameSolution<Rational> game_value(const GameMatrix<Rational>&, const SolveOptions&);
template GameSolution<double> game_value(const GameMatrix<double>&, const SolveOptions&);

}  // namespace reslab
