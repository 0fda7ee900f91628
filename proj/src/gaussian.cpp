#include "reslab/gaussian.hpp"

#include <cmath>
#include <numbers>

#include "json.hpp"

namespace reslab {

Eigen::MatrixXd cholesky(const Eigen::MatrixXd& sigma) {
  const int n = static_cast<int>(sigma.rows());
  if (sigma.cols() != n) throw Error("cholesky needs a square matrix");
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    double diag = sigma(j, j) - l.row(j).head(j).squaredNorm();
    if (!(diag > 0)) {
      throw Error("matrix is not positive definite: pivot " + std::to_string(j) + " equals " +
                  std::to_string(diag));
    }
    l(j, j) = std::sqrt(diag);
    for (int i = j + 1; i < n; ++i) {
      l(i, j) = (sigma(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
    }
  }
  return l;
}

GaussianProcessSpec GaussianProcessSpec::from_moments(const MomentMatrix& zeta, int d) {
  if (d < 1) throw Error("dimension d must be at least 1");
  Covariance c = covariance_of(zeta);
  GaussianProcessSpec spec;
  spec.sigma = c.sigma;
  spec.mu = c.mean;
  spec.d = d;
  spec.min_eigenvalue = c.min_eigenvalue;
  spec.factor = cholesky(c.sigma);
  return spec;
}

Eigen::MatrixXd transform_normals(const GaussianProcessSpec& spec, const Eigen::MatrixXd& z) {
  Eigen::MatrixXd y = spec.factor * z;
  y.colwise() += spec.mu;
  return y;
}

Eigen::MatrixXd sample_gaussians(const GaussianProcessSpec& spec, Rng& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd z(spec.t(), spec.d);
  for (int l = 0; l < spec.d; ++l) {
    for (int i = 0; i < spec.t(); ++i) z(i, l) = normal(rng);
  }
  return transform_normals(spec, z);
}

Eigen::MatrixXd sample_gaussians(const GaussianProcessSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  return sample_gaussians(spec, rng);
}

double gaussian_density_t(const Eigen::VectorXd& v, const Eigen::VectorXd& mu,
                          const Eigen::LLT<Eigen::MatrixXd>& llt) {
  const int t = static_cast<int>(v.size());
  Eigen::VectorXd w = llt.matrixL().solve(v - mu);
  double log_det = 0;
  for (int i = 0; i < t; ++i) log_det += std::log(llt.matrixL()(i, i));
  double log_density = -0.5 * w.squaredNorm() - log_det - 0.5 * t * std::log(2 * std::numbers::pi);
  return std::exp(log_density);
}

double gaussian_density(const Eigen::MatrixXd& points, const GaussianProcessSpec& spec) {
  if (points.rows() != spec.t()) throw Error("point count does not match the moment matrix");
  Eigen::LLT<Eigen::MatrixXd> llt(spec.sigma);
  if (llt.info() != Eigen::Success) throw Error("singular covariance in density evaluation");
  double density = 1;
  for (int l = 0; l < points.cols(); ++l) {
    density *= gaussian_density_t(points.col(l), spec.mu, llt);
  }
  return density;
}

double gaussian_density(const Eigen::MatrixXd& points, const MomentMatrix& zeta) {
  Covariance c = covariance_of(zeta);
  if (points.rows() != zeta.arity()) throw Error("point count does not match the moment matrix");
  Eigen::LLT<Eigen::MatrixXd> llt(c.sigma);
  if (llt.info() != Eigen::Success || !(c.min_eigenvalue > 0)) {
    throw Error("singular covariance in density evaluation; apply noise_shift first");
  }
  double density = 1;
  for (int l = 0; l < points.cols(); ++l) density *= gaussian_density_t(points.col(l), c.mean, llt);
  return density;
}

int cells_per_axis(int q) {
  if (q < 0 || q > 20) throw Error("partition level out of range");
  return 1 << (q + 1);
}

std::uint64_t num_cells(int d, int q) {
  std::uint64_t n = 1;
  for (int l = 0; l < d; ++l) n *= cells_per_axis(q);
  return n;
}

namespace {

int axis_cell(double y, int q) {
  const int half = 1 << q;
  double a = std::fabs(y);
  int j = static_cast<int>(std::floor(a * half));
  if (j >= half) j = half - 1;
  return y >= 0 ? half + j : half - 1 - j;
}

}  // namespace

std::optional<CellId> cell_index(const double* y, int d, int q) {
  const std::uint64_t m = cells_per_axis(q);
  CellId id = 0;
  std::uint64_t scale = 1;
  for (int l = 0; l < d; ++l) {
    if (!(std::fabs(y[l]) <= 1)) return std::nullopt;
    id += scale * axis_cell(y[l], q);
    scale *= m;
  }
  return id;
}

CellId mirror_cell(CellId id, int d, int q) {
  const std::uint64_t m = cells_per_axis(q);
  CellId out = 0;
  std::uint64_t scale = 1;
  for (int l = 0; l < d; ++l) {
    std::uint64_t c = id % m;
    id /= m;
    out += scale * (m - 1 - c);
    scale *= m;
  }
  return out;
}

bool is_canonical_cell(CellId id, int d, int q) {
  const std::uint64_t m = cells_per_axis(q);
  if (id >= num_cells(d, q)) return false;
  return id % m >= m / 2;
}

CellId coarsen_cell(CellId id, int d, int q) {
  const std::uint64_t fine = cells_per_axis(q + 1);
  const std::uint64_t coarse = cells_per_axis(q);
  CellId out = 0;
  std::uint64_t scale = 1;
  for (int l = 0; l < d; ++l) {
    std::uint64_t c = id % fine;
    id /= fine;
    out += scale * (c >> 1);
    scale *= coarse;
  }
  return out;
}

Eigen::VectorXd cell_center(CellId id, int d, int q) {
  const std::uint64_t m = cells_per_axis(q);
  const double width = 2.0 / static_cast<double>(m);
  Eigen::VectorXd y(d);
  for (int l = 0; l < d; ++l) {
    std::uint64_t c = id % m;
    id /= m;
    y(l) = -1 + width * (static_cast<double>(c) + 0.5);
  }
  return y;
}

PartitionedFunction::PartitionedFunction(int q, int d) : q_(q), d_(d) {
  if (d < 1) throw Error("psi dimension must be positive");
  std::uint64_t n = num_cells(d, q) / 2;
  if (n > size_budget()) throw Error("partition too large for the size budget");
  values_.assign(n, 0);
}

CellId PartitionedFunction::canonical_cell(std::size_t slot) const {
  const std::uint64_t m = cells_per_axis(q_);
  const std::uint64_t half = m / 2;
  return (slot % half + half) + m * (slot / half);
}

std::size_t PartitionedFunction::canonical_slot(CellId id) const {
  const std::uint64_t m = cells_per_axis(q_);
  const std::uint64_t half = m / 2;
  return (id % m - half) + half * (id / m);
}

int PartitionedFunction::value_at_cell(CellId id) const {
  if (is_canonical_cell(id, d_, q_)) return values_[canonical_slot(id)];
  return -values_[canonical_slot(mirror_cell(id, d_, q_))];
}

void PartitionedFunction::set_slot(std::size_t slot, int value) {
  if (value < -1 || value > 1) throw Error("psi values must lie in {-1,0,1}");
  values_.at(slot) = static_cast<std::int8_t>(value);
}

void PartitionedFunction::set_cell(CellId id, int value) {
  if (id >= num_cells(d_, q_)) throw Error("cell id out of range");
  if (is_canonical_cell(id, d_, q_)) {
    set_slot(canonical_slot(id), value);
  } else {
    set_slot(canonical_slot(mirror_cell(id, d_, q_)), -value);
  }
}

int PartitionedFunction::eval(const double* y) const {
  auto id = cell_index(y, d_, q_);
  if (!id) return 0;
  return value_at_cell(*id);
}

PartitionedFunction PartitionedFunction::refine() const {
  PartitionedFunction fine(q_ + 1, d_);
  for (std::size_t slot = 0; slot < fine.num_canonical(); ++slot) {
    CellId id = fine.canonical_cell(slot);
    fine.values_[slot] = static_cast<std::int8_t>(value_at_cell(coarsen_cell(id, d_, q_)));
  }
  return fine;
}

bool PartitionedFunction::is_zero() const {
  for (auto v : values_) {
    if (v != 0) return false;
  }
  return true;
}

std::string serialize_psi(const PartitionedFunction& psi) {
  nlohmann::json j;
  j["q"] = psi.q();
  j["d"] = psi.d();
  j["cells"] = nlohmann::json::object();
  for (std::size_t slot = 0; slot < psi.num_canonical(); ++slot) {
    if (psi.slot_value(slot) != 0) {
      j["cells"][std::to_string(psi.canonical_cell(slot))] = psi.slot_value(slot);
    }
  }
  return j.dump();
}

PartitionedFunction parse_psi(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("psi file is not valid JSON: ") + e.what());
  }
  if (!j.contains("q") || !j.contains("d") || !j.contains("cells") || !j["cells"].is_object()) {
    throw Error("psi file needs fields q, d, cells");
  }
  PartitionedFunction psi(j["q"].get<int>(), j["d"].get<int>());
  for (const auto& [key, value] : j["cells"].items()) {
    CellId id = 0;
    try {
      id = std::stoull(key);
    } catch (const std::exception&) {
      throw Error("psi cell id '" + key + "' is not an integer");
    }
    if (!is_canonical_cell(id, psi.d(), psi.q())) {
      throw Error("psi cell " + key + " is not in the canonical half");
    }
    if (!value.is_number_integer()) throw Error("psi values must be integers");
    psi.set_cell(id, value.get<int>());
  }
  return psi;
}

}  // namespace reslab
