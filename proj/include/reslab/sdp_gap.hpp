#pragma once

#include <optional>
#include <string>
#include <vector>

#include "reslab/basic_relaxation.hpp"
#include "reslab/vanishing.hpp"

namespace reslab {

struct SdpGapConfig {
  Predicate f;
  std::optional<FiniteMeasure> lambda{};  // vanishing measure on C(f)
  Rational delta{1, 10};
  int d = 8;
  Rational epsilon{1, 4};
  int net_size = 16;  // variables: points on the sqrt(d)-sphere, canonical half
  std::size_t m = 200;
  std::uint64_t seed = 1;
  // Fail when more than this fraction of sampled tuples is rejected.
  double max_rejection = 0.999;
  bool require_vanishing = true;
};

struct SdpGapInstance {
  CspInstance phi;
  BasicSolution solution;
  std::vector<std::vector<double>> net;
  std::vector<std::size_t> atom_of;  // per constraint
  std::size_t attempts = 0;
  std::size_t rejected_not_good = 0;
  std::size_t rejected_repeat = 0;
  // Largest change of a normalized inner product caused by snapping.
  double max_snap_drift = 0;
};

// Gaussian tuple for zeta' = noise_shift(zeta, delta): each row is a point
// y_i in R^d.
bool is_epsilon_good(const Eigen::MatrixXd& points, const MomentMatrix& zeta_shifted,
                     double epsilon);

SdpGapInstance generate_sdp_gap_instance(const SdpGapConfig& cfg);

}  // namespace reslab
