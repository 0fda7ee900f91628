#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "reslab/basic_relaxation.hpp"
#include "reslab/csp.hpp"
#include "reslab/gaussian.hpp"
#include "reslab/sherali_adams.hpp"

namespace reslab {

// Odd map [-1,1] -> [-1,1] applied to LP biases. Knot maps are piecewise
// linear through (x, y) pairs covering [-1,1] and must satisfy y(-x) = -y(x).
class OddBiasMap {
 public:
  enum class Kind { kZero, kIdentity, kSign, kKnots };

  OddBiasMap() = default;
  static OddBiasMap zero() { return OddBiasMap(Kind::kZero, {}); }
  static OddBiasMap identity() { return OddBiasMap(Kind::kIdentity, {}); }
  static OddBiasMap sign() { return OddBiasMap(Kind::kSign, {}); }
  static OddBiasMap knots(std::vector<std::pair<Rational, Rational>> points);
  // "zero", "identity", "sign", or "knots:x1:y1,x2:y2,..." with rationals.
  static OddBiasMap parse(const std::string& text);

  Kind kind() const { return kind_; }
  const std::vector<std::pair<Rational, Rational>>& points() const { return points_; }
  Rational operator()(const Rational& p) const;
  std::string describe() const;

 private:
  OddBiasMap(Kind kind, std::vector<std::pair<Rational, Rational>> points)
      : kind_(kind), points_(std::move(points)) {}
  Kind kind_ = Kind::kZero;
  std::vector<std::pair<Rational, Rational>> points_;
};

enum class RoundingKind { kGaussian, kLpBias };
const char* to_string(RoundingKind kind);

struct WeightedPsi {
  double weight = 1;
  PartitionedFunction psi;
};

struct RoundingScheme {
  RoundingKind kind = RoundingKind::kGaussian;
  std::vector<WeightedPsi> psis;  // gaussian: the distribution Gamma over psi
  OddBiasMap bias_map;            // lp_bias
  Rational delta{0};
  int d = 0;  // 0 means k + 1
  std::uint64_t seed = 1;
  std::size_t trials = 2000;
  int jobs = 1;

  // Rejects non-odd maps, bad weights, mismatched psi dimensions.
  void validate(int arity) const;
  int dimension(int arity) const { return d > 0 ? d : arity + 1; }
  bool trivial() const;  // every psi (or the bias map) is identically zero
};

struct RoundingReport {
  double expected_value = 0;
  double std_error = 0;
  std::optional<Rational> exact_value;  // closed form, when available
  double rho = 0;
  std::vector<double> advantage;  // per constraint, over rho
  std::uint64_t seed = 0;
  std::size_t trials = 0;
  bool analytic = false;  // no sampling was needed
  std::vector<int> sampled_assignment;
  double sampled_value = 0;
};

// Moment matrix of the rounded vectors of constraint c:
// zeta(0,i) = <b_i v_i, u>, zeta(i,j) = <b_i v_i, b_j v_j>, v_i = sqrt(1-delta) (plus - minus)
// + sqrt(delta) e_i.
MomentMatrix constraint_moment_matrix(const CspInstance& phi, const BasicSolution& sol,
                                      std::size_t c, const Rational& delta);

RoundingReport round_sdp(const CspInstance& phi, const BasicSolution& sol,
                         const RoundingScheme& scheme, double verify_tol = 1e-6);

RoundingReport round_lp(const CspInstance& phi, const LocalDistributionFamily& family,
                        const RoundingScheme& scheme);

// Exact expected fraction of satisfied constraints when variable v is set to
// 1 with probability (1 + psi(bias_v)) / 2 independently.
Rational lp_round_exact(const CspInstance& phi, const std::vector<Rational>& biases,
                        const OddBiasMap& map);

struct ClosedFormValue {
  double value = 0;
  double std_error = 0;
  std::optional<Rational> exact;
};

// rho(f) + opay(zeta_C, Gamma) for the gaussian kind (guard-off Monte Carlo
// with `samples` draws), or the exact product formula on the biases of zeta_C
// for lp_bias.
ClosedFormValue expected_round_value_closed_form(const Predicate& f, const MomentMatrix& zeta_c,
                                                 const RoundingScheme& scheme,
                                                 std::size_t samples);

std::string serialize_rounding_report(const RoundingReport& report, const RoundingScheme& scheme);

}  // namespace reslab
