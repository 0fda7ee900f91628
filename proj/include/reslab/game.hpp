#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "reslab/gaussian.hpp"
#include "reslab/lp.hpp"
#include "reslab/predicate.hpp"

namespace reslab {

struct GameConfig {
  Predicate f;
  Rational delta{1, 4};
  int d = 0;  // 0 means k + 1
  int q = 0;
  std::vector<MomentMatrix> dev_points{};
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
  int jobs = 1;

  int dimension() const { return d > 0 ? d : f.arity() + 1; }
};

struct PayoffEstimate {
  double mean = 0;
  double std_error = 0;
  std::size_t samples = 0;
};

// Cell codes of k Gaussian points per sample: 0 outside the box, +(s+1) for
// canonical slot s, -(s+1) for the mirror of slot s.
struct SampledCells {
  int k = 0;
  int q = 0;
  std::size_t samples = 0;
  std::vector<std::int32_t> codes;  // samples x k
};

// Shared-base Monte Carlo for pay/opay. Every moment matrix is sampled as
// mu + L z on the same standard normals z, so estimates for different
// matrices and different psi are paired.
class PayoffSampler {
 public:
  PayoffSampler(const Predicate& f, int d, std::size_t samples, std::uint64_t seed);

  SampledCells sample(const MomentMatrix& zeta, int q) const;
  // Per-sample payoff values.
  std::vector<double> values(const SampledCells& cells, const PartitionedFunction& psi,
                             bool guard) const;
  PayoffEstimate estimate(const SampledCells& cells, const PartitionedFunction& psi,
                          bool guard) const;
  // Payoff of sample n alone.
  double sample_value(const SampledCells& cells, std::size_t n, const PartitionedFunction& psi,
                      bool guard) const;

  std::size_t samples() const { return samples_; }
  int d() const { return d_; }

 private:
  const Predicate* f_;
  int d_;
  std::size_t samples_;
  std::vector<double> base_;  // samples x k x d standard normals
  std::vector<SubsetMask> support_;
  std::vector<double> coeff_;
};

PayoffEstimate summarize(const std::vector<double>& values);

// zeta must be in C_delta(f): covariance eigenvalues at least delta.
void check_dev_point(const MomentMatrix& zeta, const Rational& delta);

PayoffEstimate payoff_estimate(const MomentMatrix& zeta, const PartitionedFunction& psi,
                               const GameConfig& cfg, bool multilinear_guard);

struct PayoffMatrix {
  GameMatrix<double> game;
  std::vector<double> std_errors;  // row-major like game.payoffs
  double max_std_error() const;
};

PayoffMatrix payoff_matrix(const GameConfig& cfg, const std::vector<PartitionedFunction>& psis,
                           bool multilinear_guard = true);

// R_p: noise-shifted moment matrices of distributions on f^{-1}(1) whose
// weights are multiples of 2^-(p-1); R_1 is the point masses. Listed so that
// R_p is a prefix of R_{p+1}.
std::vector<MomentMatrix> default_dev_points(const Predicate& f, int p, const Rational& delta);

// All 3^(cells/2) odd psi on P_q, in base-3 order of the canonical slots.
std::vector<PartitionedFunction> enumerate_psi(int q, int d, std::uint64_t budget);
std::uint64_t psi_count(int q, int d);  // saturates at UINT64_MAX

struct GameValueReport {
  double value = 0;
  double sigma = 0;  // largest entry standard error
  double ci_low = 0;
  double ci_high = 0;
  bool exact = false;  // true: every psi enumerated
  std::vector<double> row_strategy;
  std::vector<double> col_strategy;
  std::vector<PartitionedFunction> strategies;
  PayoffMatrix matrix;
};

GameValueReport solve_payoff_game(PayoffMatrix matrix, std::vector<PartitionedFunction> psis,
                                  bool exact);

// Exact enumeration of Ang's strategies; throws when 3^(cells/2) > budget.
GameValueReport game_value_pq(const GameConfig& cfg, std::uint64_t psi_enumeration_budget,
                              bool multilinear_guard = true);

struct HeuristicOptions {
  std::size_t random_strategies = 32;
  int best_response_rounds = 4;
  std::size_t best_response_samples = 20000;
};

// Best response of Ang to a mixed Dev strategy by coordinate ascent over
// canonical slots, starting from `start`.
PartitionedFunction best_response(const PayoffSampler& sampler,
                                  const std::vector<SampledCells>& rows,
                                  const std::vector<double>& row_weights,
                                  PartitionedFunction start, bool guard);

struct ScanCell {
  int p = 0;
  int q = 0;
  double value = 0;
  double ci_low = 0;
  double ci_high = 0;
  bool exact = false;
  std::size_t dev_points = 0;
  std::size_t strategies = 0;
};

struct ScanReport {
  std::vector<ScanCell> grid;
  std::vector<std::string> violations;
  bool guard = true;
};

struct ScanOptions {
  Rational delta{1, 4};
  int d = 0;
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
  std::uint64_t psi_budget = 6561;  // 3^8
  bool guard = true;
  HeuristicOptions heuristic;
  // Optional explicit R_p lists, one per entry of ps; each must extend the
  // previous one. Empty means default_dev_points.
  std::vector<std::vector<MomentMatrix>> dev_families;
};

// V(p,q) over the grid. Dev points R_p are nested by construction; Ang's
// population at level q contains the refinement of the population at q-1,
// so every cell is a value of nested matrix games on shared samples.
ScanReport scan_limits(const Predicate& f, const std::vector<int>& ps, const std::vector<int>& qs,
                       const ScanOptions& options);

std::string scan_report_tsv(const ScanReport& report);

}  // namespace reslab
