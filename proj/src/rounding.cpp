#include "reslab/rounding.hpp"

#include <algorithm>
#include <cmath>
#include "json.hpp"
#include <random>
#include <sstream>

#include "reslab/game.hpp"
#include "reslab/parallel.hpp"

namespace reslab {

OddBiasMap OddBiasMap::knots(std::vector<std::pair<Rational, Rational>> points) {
  if (points.size() < 2) throw Error("knot map needs at least two knots");
  for (std::size_t i = 0; i < points.size(); ++i) {
    points[i].first.canonicalize();
    points[i].second.canonicalize();
    if (i > 0 && points[i].first <= points[i - 1].first) {
      throw Error("knot abscissae must be strictly increasing");
    }
    if (abs(points[i].second) > 1) throw Error("knot values must lie in [-1,1]");
  }
  if (points.front().first != -1 || points.back().first != 1) {
    throw Error("knots must cover [-1,1]");
  }
  OddBiasMap map(Kind::kKnots, std::move(points));
  for (const auto& [x, y] : map.points_) {
    if (map(-x) != -y) {
      throw Error("bias map is not odd: psi(" + to_string(Rational(-x)) + ") != -psi(" +
                  to_string(x) + ")");
    }
  }
  return map;
}

OddBiasMap OddBiasMap::parse(const std::string& text) {
  if (text == "zero") return zero();
  if (text == "identity") return identity();
  if (text == "sign") return sign();
  const std::string prefix = "knots:";
  if (text.rfind(prefix, 0) != 0) {
    throw Error("unknown bias map '" + text + "' (zero, identity, sign, knots:x:y,...)");
  }
  std::vector<std::pair<Rational, Rational>> points;
  std::stringstream list(text.substr(prefix.size()));
  std::string item;
  while (std::getline(list, item, ',')) {
    auto colon = item.find(':');
    if (colon == std::string::npos) throw Error("knot '" + item + "' is not x:y");
    points.emplace_back(parse_rational(item.substr(0, colon)),
                        parse_rational(item.substr(colon + 1)));
  }
  return knots(std::move(points));
}

Rational OddBiasMap::operator()(const Rational& p) const {
  if (abs(p) > 1) throw Error("bias " + to_string(p) + " lies outside [-1,1]");
  switch (kind_) {
    case Kind::kZero:
      return 0;
    case Kind::kIdentity:
      return p;
    case Kind::kSign:
      return sgn(p);
    case Kind::kKnots:
      break;
  }
  for (std::size_t i = 1; i < points_.size(); ++i) {
    const auto& [x1, y1] = points_[i];
    if (p > x1) continue;
    const auto& [x0, y0] = points_[i - 1];
    Rational out = y0 + (y1 - y0) * (p - x0) / (x1 - x0);
    out.canonicalize();
    return out;
  }
  return points_.back().second;
}

std::string OddBiasMap::describe() const {
  switch (kind_) {
    case Kind::kZero:
      return "zero";
    case Kind::kIdentity:
      return "identity";
    case Kind::kSign:
      return "sign";
    case Kind::kKnots:
      break;
  }
  std::string out = "knots:";
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (i > 0) out += ',';
    out += to_string(points_[i].first) + ":" + to_string(points_[i].second);
  }
  return out;
}

const char* to_string(RoundingKind kind) {
  return kind == RoundingKind::kGaussian ? "gaussian" : "lp_bias";
}

void RoundingScheme::validate(int arity) const {
  if (kind == RoundingKind::kLpBias) {
    // Re-run the knot checks so hand-assembled maps are covered too.
    if (bias_map.kind() == OddBiasMap::Kind::kKnots) OddBiasMap::knots(bias_map.points());
    return;
  }
  if (psis.empty()) throw Error("gaussian rounding needs at least one psi");
  if (sgn(delta) < 0 || delta >= 1) throw Error("rounding delta must lie in [0,1)");
  const int dim = dimension(arity);
  if (dim < 1) throw Error("rounding dimension d must be at least 1");
  double total = 0;
  for (const auto& w : psis) {
    if (!(w.weight >= 0)) throw Error("psi weights must be nonnegative");
    if (w.psi.d() != dim) throw Error("psi dimension does not match the rounding dimension");
    total += w.weight;
  }
  if (std::abs(total - 1) > 1e-9) throw Error("psi weights must sum to 1");
}

bool RoundingScheme::trivial() const {
  if (kind == RoundingKind::kLpBias) return bias_map.kind() == OddBiasMap::Kind::kZero;
  for (const auto& w : psis) {
    if (w.weight > 0 && !w.psi.is_zero()) return false;
  }
  return true;
}

namespace {

// E[f(b o x)] - rho for independent x_v with E[x_v] = mean[v]. Repeated
// variables inside a constraint contribute x_v^2 = 1.
template <class T>
T constraint_advantage(const Predicate& f, const Constraint& c, const std::vector<T>& mean) {
  const int k = f.arity();
  T total = 0;
  for (SubsetMask s : f.spectrum().support()) {
    int sign = 1;
    int vars[kMaxArity];
    int count = 0;
    for (int j = 0; j < k; ++j) {
      if (!(s >> j & 1U)) continue;
      sign *= c.signs[j];
      vars[count++] = c.vars[j];
    }
    std::sort(vars, vars + count);
    T prod = sign;
    for (int a = 0; a < count;) {
      int b = a;
      while (b < count && vars[b] == vars[a]) ++b;
      if ((b - a) % 2 == 1) prod *= mean[vars[a]];
      a = b;
    }
    if (prod == 0) continue;
    if constexpr (std::is_same_v<T, double>) {
      total += to_double(f.spectrum()[s]) * prod;
    } else {
      total += f.spectrum()[s] * prod;
    }
  }
  return total;
}

std::vector<int> coin_flips(const std::vector<double>& mean, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<int> out(mean.size());
  for (std::size_t v = 0; v < mean.size(); ++v) {
    out[v] = unit(rng) < (1 + mean[v]) / 2 ? 1 : -1;
  }
  return out;
}

void finish(RoundingReport& report, const std::vector<double>& trial_values) {
  auto s = summarize(trial_values);
  report.expected_value = s.mean;
  report.std_error = s.std_error;
}

}  // namespace

MomentMatrix constraint_moment_matrix(const CspInstance& phi, const BasicSolution& sol,
                                      std::size_t c, const Rational& delta) {
  const int k = phi.predicate().arity();
  const Constraint& con = phi.constraint(c);
  const double keep = 1 - to_double(delta);
  const int dim = sol.dim();
  auto dot = [dim](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (int i = 0; i < dim; ++i) s += a[i] * b[i];
    return s;
  };
  std::vector<std::vector<double>> tilde(k, std::vector<double>(dim));
  for (int j = 0; j < k; ++j) {
    const int v = con.vars[j];
    for (int i = 0; i < dim; ++i) tilde[j][i] = sol.plus[v][i] - sol.minus[v][i];
  }
  auto exact = [](double x) {
    x = std::clamp(x, -1.0, 1.0);
    return Rational(x);
  };
  std::vector<Rational> e((k + 1) * (k + 1));
  e[0] = 1;
  for (int j = 0; j < k; ++j) {
    const Rational bias = exact(con.signs[j] * std::sqrt(keep) * dot(tilde[j], sol.unit));
    e[j + 1] = bias;
    e[(j + 1) * (k + 1)] = bias;
    for (int l = j; l < k; ++l) {
      Rational value = 1;
      // Distinct positions carry orthogonal e_i only for distinct variables.
      if (l != j) {
        double g = keep * dot(tilde[j], tilde[l]);
        if (con.vars[j] == con.vars[l]) g += 1 - keep;
        value = exact(con.signs[j] * con.signs[l] * g);
      }
      e[(j + 1) * (k + 1) + l + 1] = value;
      e[(l + 1) * (k + 1) + j + 1] = value;
    }
  }
  return MomentMatrix(k, std::move(e));
}

RoundingReport round_sdp(const CspInstance& phi, const BasicSolution& sol,
                         const RoundingScheme& scheme, double verify_tol) {
  const Predicate& f = phi.predicate();
  if (scheme.kind != RoundingKind::kGaussian) throw Error("round_sdp needs a gaussian scheme");
  scheme.validate(f.arity());
  const int n = phi.num_vars();
  if (sol.num_vars() != n || static_cast<int>(sol.minus.size()) != n) {
    throw Error("basic solution is missing vectors for some variables");
  }
  if (sol.local.size() != phi.size()) {
    throw Error("basic solution is missing local distributions for some constraints");
  }
  auto check = verify_basic_solution(phi, sol, verify_tol);
  if (!check.passes) throw Error("basic solution fails verification at the configured tolerance");

  RoundingReport report;
  report.rho = to_double(f.rho());
  report.seed = scheme.seed;
  report.advantage.assign(phi.size(), 0.0);
  if (scheme.trivial()) {
    // Every variable is a fair coin, so each constraint is satisfied with
    // probability rho.
    report.analytic = true;
    report.exact_value = f.rho();
    report.expected_value = report.rho;
    Rng rng = make_rng(scheme.seed, 0);
    report.sampled_assignment = coin_flips(std::vector<double>(n, 0.0), rng);
    report.sampled_value = to_double(estimate_sat(phi, report.sampled_assignment));
    return report;
  }

  const int dim = sol.dim();
  const int d = scheme.dimension(f.arity());
  const double keep = std::sqrt(1 - to_double(scheme.delta));
  const double noise = std::sqrt(to_double(scheme.delta));
  std::vector<std::vector<double>> perp(n, std::vector<double>(dim));
  std::vector<double> along(n);
  for (int v = 0; v < n; ++v) {
    double a = 0;
    for (int i = 0; i < dim; ++i) a += (sol.plus[v][i] - sol.minus[v][i]) * sol.unit[i];
    along[v] = a;
    for (int i = 0; i < dim; ++i) {
      perp[v][i] = sol.plus[v][i] - sol.minus[v][i] - a * sol.unit[i];
    }
  }

  std::vector<double> trial_values(scheme.trials, 0.0);
  std::vector<std::vector<double>> trial_adv(scheme.trials);
  parallel_for(scheme.trials, scheme.jobs, [&](std::size_t t) {
    Rng rng = make_rng(scheme.seed, t + 1);
    std::normal_distribution<double> normal;
    std::vector<double> g(static_cast<std::size_t>(d) * (dim + n));
    for (auto& z : g) z = normal(rng);
    std::vector<double> y(static_cast<std::size_t>(n) * d);
    for (int v = 0; v < n; ++v) {
      for (int l = 0; l < d; ++l) {
        const double* gl = &g[static_cast<std::size_t>(l) * (dim + n)];
        double s = 0;
        for (int i = 0; i < dim; ++i) s += perp[v][i] * gl[i];
        y[static_cast<std::size_t>(v) * d + l] = keep * s + noise * gl[dim + v] + keep * along[v];
      }
    }
    std::vector<double> adv(phi.size(), 0.0);
    std::vector<double> mean(n);
    for (const auto& w : scheme.psis) {
      if (w.weight == 0) continue;
      for (int v = 0; v < n; ++v) mean[v] = w.psi.eval(&y[static_cast<std::size_t>(v) * d]);
      for (std::size_t c = 0; c < phi.size(); ++c) {
        adv[c] += w.weight * constraint_advantage<double>(f, phi.constraint(c), mean);
      }
    }
    double total = 0;
    for (double a : adv) total += a;
    trial_values[t] = report.rho + (phi.size() ? total / phi.size() : 0.0);
    trial_adv[t] = std::move(adv);
  });
  for (const auto& adv : trial_adv) {
    for (std::size_t c = 0; c < adv.size(); ++c) report.advantage[c] += adv[c];
  }
  for (auto& a : report.advantage) a /= static_cast<double>(std::max<std::size_t>(1, scheme.trials));
  report.trials = scheme.trials;
  finish(report, trial_values);

  // One concrete assignment: psi drawn from Gamma, then the coins.
  Rng rng = make_rng(scheme.seed, 0);
  std::normal_distribution<double> normal;
  std::vector<double> weights;
  for (const auto& w : scheme.psis) weights.push_back(w.weight);
  std::discrete_distribution<std::size_t> pick_psi(weights.begin(), weights.end());
  const auto& psi = scheme.psis[pick_psi(rng)].psi;
  std::vector<double> g(static_cast<std::size_t>(d) * (dim + n));
  for (auto& z : g) z = normal(rng);
  std::vector<double> mean(n);
  std::vector<double> point(d);
  for (int v = 0; v < n; ++v) {
    for (int l = 0; l < d; ++l) {
      const double* gl = &g[static_cast<std::size_t>(l) * (dim + n)];
      double s = 0;
      for (int i = 0; i < dim; ++i) s += perp[v][i] * gl[i];
      point[l] = keep * s + noise * gl[dim + v] + keep * along[v];
    }
    mean[v] = psi.eval(point.data());
  }
  report.sampled_assignment = coin_flips(mean, rng);
  report.sampled_value = to_double(estimate_sat(phi, report.sampled_assignment));
  return report;
}

Rational lp_round_exact(const CspInstance& phi, const std::vector<Rational>& biases,
                        const OddBiasMap& map) {
  const Predicate& f = phi.predicate();
  if (static_cast<int>(biases.size()) != phi.num_vars()) throw Error("one bias per variable");
  std::vector<Rational> mean(biases.size());
  for (std::size_t v = 0; v < biases.size(); ++v) mean[v] = map(biases[v]);
  if (phi.size() == 0) return f.rho();
  Rational total = 0;
  for (std::size_t c = 0; c < phi.size(); ++c) {
    total += constraint_advantage<Rational>(f, phi.constraint(c), mean);
  }
  Rational out = f.rho() + total / static_cast<long>(phi.size());
  out.canonicalize();
  return out;
}

RoundingReport round_lp(const CspInstance& phi, const LocalDistributionFamily& family,
                        const RoundingScheme& scheme) {
  const Predicate& f = phi.predicate();
  if (scheme.kind != RoundingKind::kLpBias) throw Error("round_lp needs an lp_bias scheme");
  scheme.validate(f.arity());
  const int n = phi.num_vars();
  std::vector<Rational> biases(n, Rational(0));
  std::vector<bool> used(n, false);
  for (const auto& c : phi.constraints()) {
    for (int v : c.vars) used[v] = true;
  }
  for (int v = 0; v < n; ++v) {
    const auto* p = family.find({v});
    if (!p) {
      if (used[v]) throw Error("missing singleton marginal for variable " + std::to_string(v));
      continue;
    }
    biases[v] = (*p)[0] - (*p)[1];
  }

  RoundingReport report;
  report.rho = to_double(f.rho());
  report.seed = scheme.seed;
  report.exact_value = lp_round_exact(phi, biases, scheme.bias_map);
  std::vector<Rational> mean_exact(n);
  std::vector<double> mean(n);
  for (int v = 0; v < n; ++v) {
    mean_exact[v] = scheme.bias_map(biases[v]);
    mean[v] = to_double(mean_exact[v]);
  }
  report.advantage.resize(phi.size());
  for (std::size_t c = 0; c < phi.size(); ++c) {
    report.advantage[c] =
        to_double(constraint_advantage<Rational>(f, phi.constraint(c), mean_exact));
  }
  if (scheme.trivial()) report.analytic = true;

  std::vector<double> trial_values(scheme.trials, 0.0);
  parallel_for(scheme.trials, scheme.jobs, [&](std::size_t t) {
    Rng rng = make_rng(scheme.seed, t + 1);
    trial_values[t] = to_double(estimate_sat(phi, coin_flips(mean, rng)));
  });
  report.trials = scheme.trials;
  finish(report, trial_values);
  if (scheme.trials == 0) report.expected_value = to_double(*report.exact_value);
  Rng rng = make_rng(scheme.seed, 0);
  report.sampled_assignment = coin_flips(mean, rng);
  report.sampled_value = to_double(estimate_sat(phi, report.sampled_assignment));
  return report;
}

ClosedFormValue expected_round_value_closed_form(const Predicate& f, const MomentMatrix& zeta_c,
                                                 const RoundingScheme& scheme,
                                                 std::size_t samples) {
  const int k = f.arity();
  if (zeta_c.arity() != k) throw Error("moment matrix arity does not match the predicate");
  scheme.validate(k);
  ClosedFormValue out;
  if (scheme.trivial()) {
    out.exact = f.rho();
    out.value = to_double(f.rho());
    return out;
  }
  if (scheme.kind == RoundingKind::kLpBias) {
    Rational total = f.rho();
    for (SubsetMask s : f.spectrum().support()) {
      Rational prod = f.spectrum()[s];
      for (int i = 0; i < k && prod != 0; ++i) {
        if (s >> i & 1U) prod *= scheme.bias_map(zeta_c(0, i + 1));
      }
      total += prod;
    }
    total.canonicalize();
    out.exact = total;
    out.value = to_double(total);
    return out;
  }
  auto cov = covariance_of(zeta_c);
  if (cov.min_eigenvalue <= 1e-12) {
    throw Error("constraint moment matrix has singular covariance; apply a delta shift");
  }
  PayoffSampler sampler(f, scheme.dimension(k), samples, scheme.seed);
  std::vector<double> values(samples, 0.0);
  for (const auto& w : scheme.psis) {
    if (w.weight == 0) continue;
    auto cells = sampler.sample(zeta_c, w.psi.q());
    auto v = sampler.values(cells, w.psi, false);
    for (std::size_t n = 0; n < samples; ++n) values[n] += w.weight * v[n];
  }
  auto s = summarize(values);
  out.value = to_double(f.rho()) + s.mean;
  out.std_error = s.std_error;
  return out;
}

std::string serialize_rounding_report(const RoundingReport& report, const RoundingScheme& scheme) {
  nlohmann::json j;
  j["kind"] = to_string(scheme.kind);
  j["expected_value"] = report.expected_value;
  j["std_error"] = report.std_error;
  j["ci"] = {report.expected_value - 3 * report.std_error,
             report.expected_value + 3 * report.std_error};
  if (report.exact_value) j["exact_value"] = to_string(*report.exact_value);
  j["rho"] = report.rho;
  j["advantage_over_rho"] = report.expected_value - report.rho;
  j["per_constraint_advantage"] = report.advantage;
  j["seed"] = report.seed;
  j["trials"] = report.trials;
  j["analytic"] = report.analytic;
  j["sampled_assignment"] = report.sampled_assignment;
  j["sampled_value"] = report.sampled_value;
  j["delta"] = to_string(scheme.delta);
  if (scheme.kind == RoundingKind::kLpBias) {
    j["bias_map"] = scheme.bias_map.describe();
  } else {
    j["d"] = scheme.d;
    std::vector<double> weights;
    for (const auto& w : scheme.psis) weights.push_back(w.weight);
    j["psi_weights"] = weights;
  }
  return j.dump(2);
}

}  // namespace reslab
