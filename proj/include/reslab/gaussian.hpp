#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "reslab/moment.hpp"
#include "reslab/rng.hpp"

namespace reslab {

// Lower-triangular L with L L^T = sigma. Throws on a non-positive pivot.
Eigen::MatrixXd cholesky(const Eigen::MatrixXd& sigma);

// N_d(zeta): d independent coordinates, each a t-variate normal N(mu, Sigma).
struct GaussianProcessSpec {
  Eigen::MatrixXd sigma;
  Eigen::VectorXd mu;
  int d = 1;
  double min_eigenvalue = 0;
  Eigen::MatrixXd factor;  // Cholesky factor of sigma

  static GaussianProcessSpec from_moments(const MomentMatrix& zeta, int d);
  int t() const { return static_cast<int>(mu.size()); }
};

// Returns a t x d matrix; row i is the point y_i in R^d.
Eigen::MatrixXd sample_gaussians(const GaussianProcessSpec& spec, Rng& rng);
Eigen::MatrixXd sample_gaussians(const GaussianProcessSpec& spec, std::uint64_t seed);
// Same map applied to caller-provided standard normals z (t x d).
Eigen::MatrixXd transform_normals(const GaussianProcessSpec& spec, const Eigen::MatrixXd& z);

// t-variate normal density at v.
double gaussian_density_t(const Eigen::VectorXd& v, const Eigen::VectorXd& mu,
                          const Eigen::LLT<Eigen::MatrixXd>& llt);
// prod over the d coordinates of gamma_t(column l of points; Sigma, mu).
double gaussian_density(const Eigen::MatrixXd& points, const MomentMatrix& zeta);
double gaussian_density(const Eigen::MatrixXd& points, const GaussianProcessSpec& spec);

// P_q splits [-1,1]^d into M^d boxes, M = 2^(q+1), width 2^-q per axis.
// Axis cells are half-open [a,b) on the nonnegative side and mirrored on the
// negative side, so 0 belongs to the positive side and 1 to the last cell.
// Cell id = sum_l c_l M^l.
using CellId = std::uint64_t;

int cells_per_axis(int q);
std::optional<CellId> cell_index(const double* y, int d, int q);
inline std::optional<CellId> cell_index(const Eigen::VectorXd& y, int q) {
  return cell_index(y.data(), static_cast<int>(y.size()), q);
}
CellId mirror_cell(CellId id, int d, int q);
// Canonical cells have first-axis index >= M/2.
bool is_canonical_cell(CellId id, int d, int q);
CellId coarsen_cell(CellId id, int d, int q);  // level q+1 id -> level q id
std::uint64_t num_cells(int d, int q);
Eigen::VectorXd cell_center(CellId id, int d, int q);

// psi_q: odd, cell-constant, values in {-1,0,1}, zero outside the box.
class PartitionedFunction {
 public:
  PartitionedFunction() = default;
  PartitionedFunction(int q, int d);  // identically zero

  int q() const { return q_; }
  int d() const { return d_; }
  std::size_t num_canonical() const { return values_.size(); }

  // Dense canonical slot <-> cell id.
  CellId canonical_cell(std::size_t slot) const;
  std::size_t canonical_slot(CellId canonical_id) const;

  int value_at_cell(CellId id) const;
  void set_cell(CellId id, int value);  // sets the mirror to -value as well
  int slot_value(std::size_t slot) const { return values_[slot]; }
  void set_slot(std::size_t slot, int value);

  int eval(const double* y) const;
  int eval(const Eigen::VectorXd& y) const { return eval(y.data()); }

  PartitionedFunction refine() const;  // same function on P_{q+1}
  bool is_zero() const;

  bool operator==(const PartitionedFunction& o) const {
    return q_ == o.q_ && d_ == o.d_ && values_ == o.values_;
  }

 private:
  int q_ = 0;
  int d_ = 1;
  std::vector<std::int8_t> values_;
};

std::string serialize_psi(const PartitionedFunction& psi);
PartitionedFunction parse_psi(std::string_view text);

}  // namespace reslab
