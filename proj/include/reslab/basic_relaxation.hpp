#pragma once

#include <string>
#include <vector>

#include "reslab/csp.hpp"

namespace reslab {

// Candidate solution of the basic relaxation: unit vector for the empty
// assignment, vectors for (i,+1) and (i,-1), and a distribution per
// constraint over {-1,1}^k indexed by constraint positions (bit j is the
// value of the j-th listed variable, not the literal).
struct BasicSolution {
  std::vector<double> unit;
  std::vector<std::vector<double>> plus;
  std::vector<std::vector<double>> minus;
  std::vector<std::vector<Rational>> local;

  int dim() const { return static_cast<int>(unit.size()); }
  int num_vars() const { return static_cast<int>(plus.size()); }
};

struct BasicVerification {
  double tol = 0;
  double unit_norm_error = 0;
  double max_orthogonality = 0;   // |<v(i,1), v(i,-1)>|
  double max_sum_identity = 0;    // |v(i,1) + v(i,-1) - v_empty| (max entry)
  double max_singleton = 0;       // |<v(i,b), v_empty> - P(x_i = b)|
  double max_pair = 0;            // |<v(i,b), v(j,b')> - P(x_i = b, x_j = b')|
  double max_normalization = 0;   // local distributions
  Rational frac;
  bool passes = false;
};

BasicVerification verify_basic_solution(const CspInstance& phi, const BasicSolution& sol,
                                        double tol);

// Vectors ((1 + x_i)/2) u and ((1 - x_i)/2) u with u = e_0; point-mass local
// distributions.
BasicSolution integral_embedding(const CspInstance& phi, FullAssignment x);

// Exact embedding of per-constraint distributions for an instance whose
// constraints use pairwise disjoint variable sets: each constraint lives in
// its own block, rotated so every block shares the same unit vector.
BasicSolution distribution_embedding(const CspInstance& phi,
                                     const std::vector<std::vector<Rational>>& local);

std::string serialize_basic_solution(const BasicSolution& sol);
BasicSolution parse_basic_solution(std::string_view text);

}  // namespace reslab
