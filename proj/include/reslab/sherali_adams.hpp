#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "reslab/csp.hpp"
#include "reslab/lp.hpp"

namespace reslab {

// Distributions on {-1,1}^S for variable subsets S. Keys are sorted
// variable lists; in the probability vector, bit i refers to key[i].
class LocalDistributionFamily {
 public:
  int r = 0;

  void set(std::vector<int> vars, std::vector<Rational> probs);
  const std::vector<Rational>* find(const std::vector<int>& vars) const;
  const std::map<std::vector<int>, std::vector<Rational>>& dists() const { return dists_; }
  std::size_t size() const { return dists_.size(); }

  bool operator==(const LocalDistributionFamily& o) const {
    return r == o.r && dists_ == o.dists_;
  }

  static LocalDistributionFamily integral(const CspInstance& phi, FullAssignment x, int r);
  static LocalDistributionFamily uniform(const std::vector<std::vector<int>>& subsets, int r);

 private:
  std::map<std::vector<int>, std::vector<Rational>> dists_;
};

// Marginal of p (over S) onto T, T a subset of S. Both sorted.
std::vector<Rational> marginalize(const std::vector<int>& s, const std::vector<Rational>& p,
                                  const std::vector<int>& t);

// Sorted distinct variables of a constraint.
std::vector<int> constraint_support(const Constraint& c);

// Constraint supports and all their nonempty subsets plus extra sets.
std::vector<std::vector<int>> downward_closure(const CspInstance& phi,
                                               const std::vector<std::vector<int>>& extra);

struct SaLpLayout {
  int r = 0;
  // First LP variable of each subset; the subset's 2^|S| variables follow.
  std::map<std::vector<int>, int> offset;
};

// r-round Sherali-Adams LP over all subsets of size <= r. Marginalization is
// imposed for T = S minus one element, which implies it for every T in S.
LinearProgram build_sherali_adams(const CspInstance& phi, int r, SaLpLayout* layout = nullptr);
LocalDistributionFamily family_from_solution(const SaLpLayout& layout,
                                             const std::vector<Rational>& primal);

Rational sa_objective(const CspInstance& phi, const LocalDistributionFamily& fam);

struct ConsistencyReport {
  Rational max_violation;
  std::vector<int> worst_s;
  std::vector<int> worst_t;
  std::size_t pairs_checked = 0;
  bool consistent() const { return sgn(max_violation) == 0; }
};
ConsistencyReport verify_consistency(const LocalDistributionFamily& fam);

struct CorrectionResult {
  LocalDistributionFamily family;
  Rational total_l1;
  Rational max_subset_l1;
  long pivots = 0;
};
// Exactly consistent family at minimum total L1 distance from fam.
CorrectionResult correct_local_distributions(const LocalDistributionFamily& fam);

std::string serialize_family(const LocalDistributionFamily& fam);
LocalDistributionFamily parse_family(std::string_view text);

}  // namespace reslab
