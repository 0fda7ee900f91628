#pragma once

#include <optional>
#include <string>
#include <vector>

#include "reslab/csp.hpp"
#include "reslab/sherali_adams.hpp"
#include "reslab/vanishing.hpp"

namespace reslab {

struct SaGapConfig {
  Predicate f;
  // Atoms are distributions on f^{-1}(1); the generator uses the scaled
  // biases (1 - delta) * E[nu].
  std::optional<FiniteMeasure> lambda{};
  Rational epsilon{1, 5};
  int n = 8;                 // variables per layer
  Rational density{4};       // m = ceil(density * n)
  Rational eta{3, 20};
  int d_ball = 2;
  int r = 3;
  Rational delta{1, 2};
  std::uint64_t seed = 1;

  int layers() const;                   // s + 1 with s = ceil(1/epsilon)
  std::size_t num_constraints() const;  // m
  void validate() const;
};

// Layer index of |z|: 0 for z = 0, otherwise i with |z| in ((i-1)/s, i/s].
int layer_of(const Rational& abs_bias, int s);
// Representative t_i: 0 for layer 0, the midpoint of I_i otherwise.
Rational layer_representative(int layer, int s);

struct ConstraintProvenance {
  std::size_t atom = 0;
  std::vector<Rational> zeta;       // literal biases (1 - delta) E[nu]
  std::vector<int> layers;
  CubeDistribution nu_bar;          // literals: (1 - delta) nu + delta U
  CubeDistribution nu_corrected;    // literals, biases sign(zeta_j) t_{i_j}
  Rational correction_l1;
};

struct SaGapInstance {
  SaGapConfig config;
  int s = 0;
  std::vector<Rational> representatives;  // t_0..t_s
  CspInstance phi;
  std::vector<ConstraintProvenance> provenance;  // aligned with phi.constraints()

  int layer_of_var(int v) const { return v / config.n; }
  // Layers that received at least one variable occurrence.
  std::vector<int> active_layers() const;
  std::size_t active_variables() const;
};

SaGapInstance generate_sa_instance(const SaGapConfig& cfg);

struct BiasCorrection {
  CubeDistribution nu;
  std::vector<Rational> tau;
  Rational l1;
};
// Sequential mixing nu_j = (1 - tau_j) nu_{j-1} + tau_j D_j that moves the
// literal biases to `targets` exactly.
BiasCorrection bias_correct_nu(const CubeDistribution& nu, const std::vector<Rational>& targets);

// Girth of the constraint-variable multigraph; nullopt for a forest.
// A constraint repeating a variable is a 2-cycle.
std::optional<int> girth(const CspInstance& phi);

struct PruneResult {
  CspInstance phi;
  std::vector<std::size_t> kept{};  // original indices of surviving constraints
  std::size_t removed = 0;
  double removed_fraction = 0;
  std::optional<int> girth_after{};
};
// Repeatedly deletes the highest-index constraint on a shortest cycle until
// the girth exceeds g_target.
PruneResult prune_girth(const CspInstance& phi, int g_target);

// Instance restricted to the surviving constraints, provenance carried along.
SaGapInstance prune_instance(const SaGapInstance& inst, int g_target, PruneResult* result = nullptr);

// U_C = (1 - eta) nu(C) + eta U over the constraint's variables (positions,
// variable orientation).
CubeDistribution smoothed_constraint_distribution(const SaGapInstance& inst, std::size_t c);

struct BallInfo {
  std::vector<int> variables;
  std::vector<std::size_t> constraints;
  bool forest = false;
  int max_degree = 0;
};
BallInfo ball_around(const CspInstance& phi, const std::vector<int>& vars, int radius);

struct MsOptions {
  // Also enforce |S| < girth / D^d_ball, not just the forest property.
  bool strict_size = false;
};

// m_S by the tree product formula, summed over the ball. Indexed by bit j of
// S (sorted) set meaning x_{S[j]} = -1.
std::vector<Rational> build_local_distribution_ms(const SaGapInstance& inst,
                                                  const std::vector<int>& s,
                                                  const MsOptions& options = {});

// The breadth-first process for a given variable ordering (rank[v] lower is
// earlier): the least S variable of each component starts with bias
// (1 - eta) t, every constraint is drawn from U_C conditioned on its parent.
std::vector<Rational> local_distribution_ordered(const SaGapInstance& inst,
                                                 const std::vector<int>& s,
                                                 const std::vector<int>& rank);

// Monte Carlo run of the same process.
std::vector<double> local_distribution_sampled(const SaGapInstance& inst,
                                               const std::vector<int>& s, std::size_t draws,
                                               std::uint64_t seed);

struct SaAssembly {
  LocalDistributionFamily family;
  ConsistencyReport consistency;
};
// m_S for every constraint support, all its subsets, and `extra`.
SaAssembly assemble_sa_solution(const SaGapInstance& inst,
                                const std::vector<std::vector<int>>& extra = {},
                                const MsOptions& options = {});

// rho(f) + E_zeta sum_S fhat(S) prod tilde_psi(zeta_j): expected fraction of
// constraints the generator's distribution satisfies under the fixed
// assignment, where tilde_psi(z) = sign(z) * (average of the assignment over
// the layer of |z|).
Rational expected_sat_symbolic(const SaGapConfig& cfg, const std::vector<int>& assignment);

std::string serialize_provenance(const SaGapInstance& inst);

}  // namespace reslab
