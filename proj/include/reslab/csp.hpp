#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "reslab/predicate.hpp"
#include "reslab/rng.hpp"

namespace reslab {

struct Constraint {
  std::vector<int> vars;   // ordered k-tuple
  std::vector<int> signs;  // b_C in {-1,1}^k
  bool operator==(const Constraint& o) const { return vars == o.vars && signs == o.signs; }
};

// Full assignments are bitmasks: bit v set means x_v = -1.
using FullAssignment = std::uint64_t;

class CspInstance {
 public:
  CspInstance(Predicate f, int n, std::vector<Constraint> constraints);

  const Predicate& predicate() const { return f_; }
  int num_vars() const { return n_; }
  std::size_t size() const { return constraints_.size(); }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const Constraint& constraint(std::size_t c) const { return constraints_[c]; }

  // Index into f's truth table of the literal tuple (x_{v_j} b_j)_j.
  Assignment literal_index(std::size_t c, FullAssignment x) const;
  bool satisfied(std::size_t c, FullAssignment x) const { return f_(literal_index(c, x)); }
  std::size_t count_satisfied(FullAssignment x) const;

  bool operator==(const CspInstance& o) const {
    return f_ == o.f_ && n_ == o.n_ && constraints_ == o.constraints_;
  }

 private:
  Predicate f_;
  int n_;
  std::vector<Constraint> constraints_;
};

FullAssignment pack_assignment(const std::vector<int>& values);  // +1/-1 entries
std::vector<int> unpack_assignment(FullAssignment x, int n);

struct BruteForceResult {
  Rational opt;
  Rational min;
  FullAssignment argmax = 0;
  // histogram[j] = number of assignments satisfying exactly j constraints.
  std::vector<std::uint64_t> histogram;
  double mean() const;  // average sat fraction over all assignments
};

inline constexpr int kMaxBruteForceVars = 26;
BruteForceResult brute_force_opt(const CspInstance& phi, int jobs = 1);

Rational estimate_sat(const CspInstance& phi, const std::vector<int>& assignment);

struct SatEstimate {
  double mean = 0;
  double std_error = 0;
  std::size_t draws = 0;
};
SatEstimate estimate_sat(const CspInstance& phi,
                         const std::function<std::vector<int>(Rng&)>& sampler,
                         std::size_t draws, std::uint64_t seed);

// Same constraints over only the variables that occur, renumbered in
// increasing order; mapping[new] = old.
CspInstance compact_instance(const CspInstance& phi, std::vector<int>* mapping = nullptr);

std::string serialize_instance(const CspInstance& phi);
CspInstance parse_instance(std::string_view text);

}  // namespace reslab
