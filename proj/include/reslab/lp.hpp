#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "reslab/rational.hpp"

namespace reslab {

enum class Relation { kLessEqual, kEqual, kGreaterEqual };
enum class LpStatus { kOptimal, kInfeasible, kUnbounded };
enum class Backend { kExactRational, kFloat };

const char* to_string(LpStatus status);
const char* to_string(Backend backend);

template <class T>
struct BasicConstraint {
  std::vector<std::pair<int, T>> terms;  // sparse row
  Relation relation = Relation::kLessEqual;
  T rhs{};
};

// maximize objective . x subject to the constraints and per-variable bounds.
// A variable defaults to lower bound 0 and no upper bound; std::nullopt
// means unbounded in that direction.
template <class T>
struct BasicLinearProgram {
  int num_vars = 0;
  std::vector<T> objective;
  std::vector<BasicConstraint<T>> constraints;
  std::vector<std::optional<T>> lower;
  std::vector<std::optional<T>> upper;

  int add_variable(std::optional<T> lo = T(0), std::optional<T> hi = std::nullopt,
                   T cost = T(0));
  void add_constraint(std::vector<std::pair<int, T>> terms, Relation rel, T rhs);
  // Plain-text dump, one constraint per line.
  std::string dump() const;
};

using LinearProgram = BasicLinearProgram<Rational>;
using FloatLinearProgram = BasicLinearProgram<double>;

template <class T>
struct LpResult {
  LpStatus status = LpStatus::kInfeasible;
  Backend backend = Backend::kExactRational;
  T objective{};
  std::vector<T> primal;
  // Constraint multipliers of the dual min y.b, y^T A >= c with y >= 0 on
  // <= rows, y <= 0 on >= rows, free on = rows (bound multipliers omitted).
  std::vector<T> dual;
  // On infeasibility: y with y >= 0 on >= rows, y <= 0 on <= rows such that
  // sup over the bound box of (sum_i y_i a_i) . x is below sum_i y_i rhs_i.
  std::vector<T> farkas;
  long pivots = 0;
};

struct SolveOptions {
  double tolerance = 1e-9;  // float backend only
  long max_pivots = -1;     // -1: unlimited
};

template <class T>
LpResult<T> lp_solve(const BasicLinearProgram<T>& lp, const SolveOptions& options = {});

// Independent check of an infeasibility certificate.
template <class T>
bool farkas_certifies(const BasicLinearProgram<T>& lp, const std::vector<T>& y, double tol = 0);

// Row player minimizes, column player maximizes.
template <class T>
struct GameMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<T> payoffs;  // row-major
  T& at(int i, int j) { return payoffs[static_cast<std::size_t>(i) * cols + j]; }
  const T& at(int i, int j) const { return payoffs[static_cast<std::size_t>(i) * cols + j]; }
};

template <class T>
struct GameSolution {
  T value{};
  std::vector<T> row_strategy;
  std::vector<T> col_strategy;
  Backend backend = Backend::kExactRational;
};

template <class T>
GameSolution<T> game_value(const GameMatrix<T>& game, const SolveOptions& options = {});

}  // namespace reslab
