#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "reslab/rational.hpp"

namespace reslab {

inline constexpr int kMaxArity = 8;

// Assignments over {-1,1}^k are packed into an index: bit i holds
// coordinate i (0-based), 0 for +1 and 1 for -1. Subsets of coordinates are
// bitmasks with the same bit layout.
using Assignment = std::uint32_t;
using SubsetMask = std::uint32_t;

inline int coordinate(Assignment x, int i) { return ((x >> i) & 1u) ? -1 : 1; }

// chi_S(x) = prod_{i in S} x_i.
inline int character(SubsetMask s, Assignment x) {
  return (__builtin_popcount(s & x) & 1) ? -1 : 1;
}

std::string assignment_to_string(Assignment x, int k);
Assignment assignment_from_string(std::string_view s, int k);

class FourierSpectrum {
 public:
  FourierSpectrum(int k, std::vector<Rational> coeffs);

  int arity() const { return k_; }
  const Rational& operator[](SubsetMask s) const { return coeffs_[s]; }
  const std::vector<Rational>& coefficients() const { return coeffs_; }

  // sum_S fhat(S) chi_S(x).
  Rational evaluate(Assignment x) const;
  // Subsets with nonzero coefficient, excluding the empty set.
  const std::vector<SubsetMask>& support() const { return support_; }

 private:
  int k_;
  std::vector<Rational> coeffs_;
  std::vector<SubsetMask> support_;
};

// Immutable truth table f: {-1,1}^k -> {0,1} with cached spectrum and density.
class Predicate {
 public:
  Predicate(int k, std::vector<bool> table);
  static Predicate from_satisfying(int k, const std::vector<std::string>& satisfying);
  static Predicate from_assignments(int k, const std::vector<Assignment>& satisfying);

  int arity() const { return k_; }
  std::size_t table_size() const { return std::size_t{1} << k_; }
  bool operator()(Assignment x) const { return table_[x]; }
  const std::vector<bool>& table() const { return table_; }
  std::vector<Assignment> satisfying() const;
  std::size_t num_satisfying() const { return num_satisfying_; }

  const FourierSpectrum& spectrum() const { return *spectrum_; }
  const Rational& rho() const { return (*spectrum_)[0]; }

  bool operator==(const Predicate& other) const {
    return k_ == other.k_ && table_ == other.table_;
  }

 private:
  int k_;
  std::vector<bool> table_;
  std::size_t num_satisfying_ = 0;
  std::shared_ptr<const FourierSpectrum> spectrum_;
};

Predicate parse_predicate(std::string_view text);
std::string serialize_predicate(const Predicate& f);

Rational density(const Predicate& f);
FourierSpectrum fourier(const Predicate& f);
// Direct O(4^k) evaluation of the Fourier sum; kept as an independent route.
FourierSpectrum fourier_naive(const Predicate& f);
bool is_symmetric(const Predicate& f);

// Applies the permutation perm (position i receives coordinate perm[i]) to x.
Assignment permute_assignment(Assignment x, const std::vector<int>& perm);

namespace predicates {
Predicate parity(int k);
Predicate majority(int k);
Predicate disjunction(int k);
Predicate two_lin();
Predicate constant_one(int k);
}  // namespace predicates

}  // namespace reslab
