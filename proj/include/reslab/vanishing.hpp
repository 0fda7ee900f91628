#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "reslab/lp.hpp"
#include "reslab/moment.hpp"
#include "reslab/predicate.hpp"

namespace reslab {

struct MeasureAtom {
  Rational weight;
  CubeDistribution nu;
  MomentMatrix zeta;
};

// Finitely supported probability measure on moment matrices of
// distributions over f^{-1}(1).
class FiniteMeasure {
 public:
  FiniteMeasure(Predicate f, const std::vector<std::pair<Rational, CubeDistribution>>& atoms);

  const Predicate& predicate() const { return f_; }
  const std::vector<MeasureAtom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }

 private:
  Predicate f_;
  std::vector<MeasureAtom> atoms_;
};

// Grouped signed coefficients of Lambda^(t). Keys are the exact upper
// triangles of the image matrices (or bias vectors for the first-moment
// variant).
struct SignedAtomGroup {
  int t = 0;
  std::map<std::vector<Rational>, Rational> coefficients;
  bool identically_zero() const;
  std::size_t nonzero_count() const;
};

SignedAtomGroup signed_projection_groups(const FiniteMeasure& lambda, int t,
                                         const FourierSpectrum& spectrum);
// Same with atoms projected to first moments.
SignedAtomGroup signed_bias_groups(const FiniteMeasure& lambda, int t,
                                   const FourierSpectrum& spectrum);

enum class SupportStrategy { kPairwisePoint, kSatisfyingPointMasses, kSymmetrizedOrbits, kCustom };
const char* to_string(SupportStrategy s);
SupportStrategy parse_strategy(const std::string& name);

struct SearchReport {
  std::string strategy;
  bool first_moments_only = false;
  std::size_t support_size = 0;
  bool found = false;
  std::size_t lp_rows = 0;
  // Levels t carrying at least one nontrivial equation.
  std::vector<int> constrained_levels;
  // Infeasible: levels with nonzero Farkas multipliers.
  std::vector<int> binding_levels;
  std::vector<Rational> farkas;
  bool farkas_verified = false;
  std::string note;
};

std::optional<FiniteMeasure> vanishing_feasible(const Predicate& f,
                                                const std::vector<CubeDistribution>& support,
                                                SearchReport* report = nullptr);

std::optional<FiniteMeasure> charlp_general_search(const Predicate& f,
                                                   const std::vector<CubeDistribution>& support,
                                                   SearchReport* report = nullptr);

// Orbit closure of the seeds under coordinate permutations and global
// negation (images leaving f^{-1}(1) dropped), plus each orbit's average.
// Empty seeds: all point masses plus, for every pair of satisfying
// assignments with coordinate sums of opposite sign, their mixture with
// zero total bias.
std::vector<CubeDistribution> symmetrized_orbits(const Predicate& f,
                                                 const std::vector<CubeDistribution>& seeds);

std::vector<CubeDistribution> point_mass_support(const Predicate& f);

std::pair<std::optional<FiniteMeasure>, SearchReport> find_vanishing_measure(
    const Predicate& f, SupportStrategy strategy,
    const std::vector<CubeDistribution>& custom_support = {}, bool first_moments_only = false);

struct CharLpWitness {
  bool member = false;
  std::optional<Assignment> x;  // satisfying, coordinate sum >= 0
  std::optional<Assignment> y;  // satisfying, coordinate sum <= 0
};
CharLpWitness charlp_symmetric_check(const Predicate& f);

// sum_{|S|=t} fhat(S) E_pi E_b E_atoms[prod b * gamma_{t,d}(points; zeta'_{S,pi,b})]
// with zeta' = noise_shift(zeta, delta). points is t x d. Summed term by
// term in floating point; no grouping.
double theta_eval(const FiniteMeasure& lambda, const Rational& delta, int t,
                  const Eigen::MatrixXd& points);

std::string serialize_measure(const FiniteMeasure& lambda);
FiniteMeasure parse_measure(std::string_view text);

}  // namespace reslab
