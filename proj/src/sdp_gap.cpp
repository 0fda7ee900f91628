#include "reslab/sdp_gap.hpp"

#include <cmath>
#include <random>

#include "reslab/gaussian.hpp"

namespace reslab {

bool is_epsilon_good(const Eigen::MatrixXd& points, const MomentMatrix& zeta_shifted,
                     double epsilon) {
  const int k = static_cast<int>(points.rows());
  const double d = static_cast<double>(points.cols());
  for (int i = 0; i < k; ++i) {
    if (std::abs(points.row(i).sum() / d - to_double(zeta_shifted(0, i + 1))) > epsilon) {
      return false;
    }
    for (int j = i + 1; j < k; ++j) {
      const double ip = points.row(i).dot(points.row(j)) / d;
      if (std::abs(ip - to_double(zeta_shifted(i + 1, j + 1))) > epsilon) return false;
    }
  }
  return true;
}

SdpGapInstance generate_sdp_gap_instance(const SdpGapConfig& cfg) {
  if (!cfg.lambda || cfg.lambda->size() == 0) throw Error("SDP gap generator needs a measure");
  const Predicate& f = cfg.f;
  if (!(cfg.lambda->predicate() == f)) throw Error("measure predicate does not match the config");
  const int k = f.arity();
  if (cfg.d < 1) throw Error("dimension d must be at least 1");
  if (cfg.net_size < k) throw Error("net must have at least k points");
  if (sgn(cfg.delta) <= 0 || cfg.delta >= 1) throw Error("delta must lie in (0,1)");
  if (cfg.require_vanishing) {
    for (int t = 1; t <= k; ++t) {
      if (!signed_projection_groups(*cfg.lambda, t, f.spectrum()).identically_zero()) {
        throw Error("measure does not vanish at level t = " + std::to_string(t));
      }
    }
  }
  const double eps = to_double(cfg.epsilon);
  const int d = cfg.d;
  const double root_d = std::sqrt(static_cast<double>(d));

  SdpGapInstance out{CspInstance(f, 0, {}), {}, {}, {}, 0, 0, 0, 0};
  Rng net_rng = make_rng(cfg.seed, 1);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd net(cfg.net_size, d);
  for (int v = 0; v < cfg.net_size; ++v) {
    Eigen::VectorXd z(d);
    for (int l = 0; l < d; ++l) z(l) = normal(net_rng);
    z *= root_d / z.norm();
    if (z(0) < 0) z = -z;
    net.row(v) = z.transpose();
    out.net.emplace_back(z.data(), z.data() + d);
  }

  const auto& atoms = cfg.lambda->atoms();
  std::vector<double> weights;
  std::vector<MomentMatrix> shifted;
  std::vector<GaussianProcessSpec> specs;
  std::vector<CubeDistribution> nu_bar;
  const auto uniform = CubeDistribution::uniform(k);
  for (const auto& a : atoms) {
    weights.push_back(to_double(a.weight));
    shifted.push_back(noise_shift(a.zeta, cfg.delta));
    specs.push_back(GaussianProcessSpec::from_moments(shifted.back(), d));
    nu_bar.push_back(a.nu.mix(uniform, cfg.delta));
  }

  Rng rng = make_rng(cfg.seed, 2);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  const double cap = std::max(1.0, static_cast<double>(cfg.m) / std::max(1e-12, 1 - cfg.max_rejection));
  std::vector<Constraint> constraints;
  std::vector<std::vector<Rational>> local;
  while (constraints.size() < cfg.m) {
    if (static_cast<double>(out.attempts) >= cap) {
      throw Error("rejection cap exceeded after " + std::to_string(out.attempts) +
                  " tuples; increase d or the net size");
    }
    ++out.attempts;
    const std::size_t a = pick(rng);
    Eigen::MatrixXd y = sample_gaussians(specs[a], rng);
    Eigen::MatrixXd snapped(k, d);
    Constraint con;
    for (int i = 0; i < k; ++i) {
      Eigen::VectorXd ip = net * y.row(i).transpose();
      int best = 0;
      for (int v = 1; v < cfg.net_size; ++v) {
        if (std::abs(ip(v)) > std::abs(ip(best))) best = v;
      }
      const int sign = ip(best) < 0 ? -1 : 1;
      con.vars.push_back(best);
      con.signs.push_back(sign);
      snapped.row(i) = sign * net.row(best);
    }
    bool repeat = false;
    for (int i = 0; i < k; ++i) {
      for (int j = i + 1; j < k; ++j) repeat = repeat || con.vars[i] == con.vars[j];
    }
    if (repeat) {
      ++out.rejected_repeat;
      continue;
    }
    if (!is_epsilon_good(snapped, shifted[a], eps)) {
      ++out.rejected_not_good;
      continue;
    }
    for (int i = 0; i < k; ++i) {
      out.max_snap_drift = std::max(
          out.max_snap_drift, std::abs((snapped.row(i).sum() - y.row(i).sum()) / d));
      for (int j = i + 1; j < k; ++j) {
        out.max_snap_drift =
            std::max(out.max_snap_drift,
                     std::abs((snapped.row(i).dot(snapped.row(j)) - y.row(i).dot(y.row(j))) / d));
      }
    }
    // Local distribution in variable orientation: x = z o b for literals z.
    Assignment flip = 0;
    for (int i = 0; i < k; ++i) {
      if (con.signs[i] < 0) flip |= 1U << i;
    }
    std::vector<Rational> probs(std::size_t{1} << k);
    for (Assignment x = 0; x < probs.size(); ++x) probs[x] = nu_bar[a][x ^ flip];
    local.push_back(std::move(probs));
    constraints.push_back(std::move(con));
    out.atom_of.push_back(a);
  }
  out.phi = CspInstance(f, cfg.net_size, std::move(constraints));

  BasicSolution& sol = out.solution;
  sol.unit.assign(d, 1 / root_d);
  for (int v = 0; v < cfg.net_size; ++v) {
    std::vector<double> plus(d), minus(d);
    for (int l = 0; l < d; ++l) {
      plus[l] = (sol.unit[l] + net(v, l) / root_d) / 2;
      minus[l] = (sol.unit[l] - net(v, l) / root_d) / 2;
    }
    sol.plus.push_back(std::move(plus));
    sol.minus.push_back(std::move(minus));
  }
  sol.local = std::move(local);
  return out;
}

}  // namespace reslab
