#include "reslab/vanishing.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "json.hpp"
#include "reslab/gaussian.hpp"

namespace reslab {

FiniteMeasure::FiniteMeasure(Predicate f,
                             const std::vector<std::pair<Rational, CubeDistribution>>& atoms)
    : f_(std::move(f)) {
  if (atoms.empty()) throw Error("measure needs at least one atom");
  Rational total(0);
  for (const auto& [w, nu] : atoms) {
    if (sgn(w) < 0) throw Error("negative atom weight");
    if (!nu.supported_on(f_)) throw Error("atom distribution is not supported on f^{-1}(1)");
    total += w;
    atoms_.push_back({w, nu, moments_of(nu)});
  }
  if (total != 1) throw Error("atom weights sum to " + total.get_str() + ", not 1");
}

bool SignedAtomGroup::identically_zero() const { return nonzero_count() == 0; }

std::size_t SignedAtomGroup::nonzero_count() const {
  std::size_t n = 0;
  for (const auto& [key, c] : coefficients) n += sgn(c) != 0;
  return n;
}

namespace {

using AtomCoefficients = std::map<int, Rational>;
using ContributionMap = std::map<std::vector<Rational>, AtomCoefficients>;

std::vector<int> subset_list(SubsetMask s, int k) {
  std::vector<int> out;
  for (int i = 0; i < k; ++i) {
    if ((s >> i) & 1u) out.push_back(i);
  }
  return out;
}

// Visits every (S, pi, b) with |S| = t and fhat(S) != 0. The callback gets
// the source rows (0 first) and signs (1 first) of the image, and the
// coefficient fhat(S) prod(b) / (C(k,t) t! 2^t).
template <class Fn>
void for_each_image(int k, int t, const FourierSpectrum& spectrum, Fn&& fn) {
  if (t < 1 || t > k) throw Error("level t out of range");
  Rational norm = binomial(k, t) * factorial(t) * Rational(1u << t);
  std::vector<int> rows(t + 1, 0), signs(t + 1, 1);
  for (SubsetMask s = 1; s < (1u << k); ++s) {
    if (__builtin_popcount(s) != t || sgn(spectrum[s]) == 0) continue;
    std::vector<int> subset = subset_list(s, k);
    Rational base = spectrum[s] / norm;
    Rational neg_base = -base;
    std::vector<int> perm(t);
    std::iota(perm.begin(), perm.end(), 0);
    do {
      for (int i = 0; i < t; ++i) rows[i + 1] = subset[perm[i]] + 1;
      for (Assignment bmask = 0; bmask < (1u << t); ++bmask) {
        for (int i = 0; i < t; ++i) signs[i + 1] = coordinate(bmask, i);
        fn(rows, signs, (__builtin_popcount(bmask) & 1) ? neg_base : base);
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
}

std::vector<Rational> matrix_key(const MomentMatrix& zeta, const std::vector<int>& rows,
                                 const std::vector<int>& signs) {
  const int n = static_cast<int>(rows.size());
  std::vector<Rational> key;
  key.reserve(n * (n - 1) / 2);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const Rational& v = zeta(rows[i], rows[j]);
      key.push_back(signs[i] * signs[j] > 0 ? v : Rational(-v));
    }
  }
  return key;
}

std::vector<Rational> bias_key(const MomentMatrix& zeta, const std::vector<int>& rows,
                               const std::vector<int>& signs) {
  std::vector<Rational> key;
  key.reserve(rows.size() - 1);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const Rational& v = zeta(0, rows[i]);
    key.push_back(signs[i] > 0 ? v : Rational(-v));
  }
  return key;
}

void accumulate(const MomentMatrix& zeta, int atom, int t, const FourierSpectrum& spectrum,
                bool bias_only, ContributionMap& out) {
  for_each_image(zeta.arity(), t, spectrum,
                 [&](const std::vector<int>& rows, const std::vector<int>& signs,
                     const Rational& c) {
                   auto key = bias_only ? bias_key(zeta, rows, signs)
                                        : matrix_key(zeta, rows, signs);
                   out[std::move(key)][atom] += c;
                 });
}

SignedAtomGroup groups_of(const FiniteMeasure& lambda, int t, const FourierSpectrum& spectrum,
                          bool bias_only) {
  const int k = lambda.predicate().arity();
  if (t < 1 || t > k) throw Error("level t out of range");
  ContributionMap contributions;
  for (std::size_t a = 0; a < lambda.size(); ++a) {
    accumulate(lambda.atoms()[a].zeta, static_cast<int>(a), t, spectrum, bias_only,
               contributions);
  }
  SignedAtomGroup g;
  g.t = t;
  for (auto& [key, per_atom] : contributions) {
    Rational total(0);
    for (const auto& [a, c] : per_atom) total += lambda.atoms()[a].weight * c;
    g.coefficients.emplace(key, total);
  }
  return g;
}

std::optional<FiniteMeasure> solve_vanishing_lp(const Predicate& f,
                                                const std::vector<CubeDistribution>& support,
                                                bool bias_only, SearchReport* report) {
  if (support.empty()) throw Error("vanishing search needs a nonempty support");
  for (const auto& nu : support) {
    if (!nu.supported_on(f)) throw Error("support distribution is not supported on f^{-1}(1)");
  }
  const int k = f.arity();
  const int n = static_cast<int>(support.size());
  std::vector<MomentMatrix> zetas;
  for (const auto& nu : support) zetas.push_back(moments_of(nu));

  LinearProgram lp;
  for (int a = 0; a < n; ++a) lp.add_variable();
  std::vector<int> row_level;
  std::vector<int> constrained;
  for (int t = 1; t <= k; ++t) {
    ContributionMap contributions;
    for (int a = 0; a < n; ++a) accumulate(zetas[a], a, t, f.spectrum(), bias_only, contributions);
    bool any = false;
    for (auto& [key, per_atom] : contributions) {
      std::vector<std::pair<int, Rational>> terms;
      for (auto& [a, c] : per_atom) {
        if (sgn(c) != 0) terms.push_back({a, c});
      }
      if (terms.empty()) continue;
      any = true;
      lp.add_constraint(std::move(terms), Relation::kEqual, 0);
      row_level.push_back(t);
    }
    if (any) constrained.push_back(t);
  }
  if (static_cast<std::uint64_t>(lp.constraints.size() + 1) * (n + lp.constraints.size() + 1) >
      size_budget()) {
    throw Error("vanishing LP exceeds the size budget");
  }
  std::vector<std::pair<int, Rational>> norm;
  for (int a = 0; a < n; ++a) norm.push_back({a, Rational(1)});
  lp.add_constraint(std::move(norm), Relation::kEqual, 1);
  row_level.push_back(0);

  auto res = lp_solve(lp);
  if (report != nullptr) {
    report->first_moments_only = bias_only;
    report->support_size = support.size();
    report->lp_rows = lp.constraints.size();
    report->constrained_levels = constrained;
    report->found = res.status == LpStatus::kOptimal;
    report->binding_levels.clear();
    report->farkas.clear();
    report->farkas_verified = false;
  }
  if (res.status != LpStatus::kOptimal) {
    if (report != nullptr) {
      report->farkas = res.farkas;
      report->farkas_verified = farkas_certifies(lp, res.farkas);
      std::set<int> levels;
      for (std::size_t i = 0; i < res.farkas.size(); ++i) {
        if (sgn(res.farkas[i]) != 0 && row_level[i] > 0) levels.insert(row_level[i]);
      }
      report->binding_levels.assign(levels.begin(), levels.end());
    }
    return std::nullopt;
  }
  std::vector<std::pair<Rational, CubeDistribution>> atoms;
  for (int a = 0; a < n; ++a) {
    if (sgn(res.primal[a]) > 0) atoms.push_back({res.primal[a], support[a]});
  }
  return FiniteMeasure(f, atoms);
}

Assignment act(Assignment x, const std::vector<int>& perm, bool negate, int k) {
  Assignment y = permute_assignment(x, perm);
  return negate ? (y ^ ((Assignment{1} << k) - 1)) : y;
}

}  // namespace

SignedAtomGroup signed_projection_groups(const FiniteMeasure& lambda, int t,
                                         const FourierSpectrum& spectrum) {
  return groups_of(lambda, t, spectrum, false);
}

SignedAtomGroup signed_bias_groups(const FiniteMeasure& lambda, int t,
                                   const FourierSpectrum& spectrum) {
  return groups_of(lambda, t, spectrum, true);
}

const char* to_string(SupportStrategy s) {
  switch (s) {
    case SupportStrategy::kPairwisePoint: return "pairwise_point";
    case SupportStrategy::kSatisfyingPointMasses: return "satisfying_point_masses";
    case SupportStrategy::kSymmetrizedOrbits: return "symmetrized_orbits";
    case SupportStrategy::kCustom: return "custom";
  }
  return "?";
}

SupportStrategy parse_strategy(const std::string& name) {
  if (name == "pairwise_point") return SupportStrategy::kPairwisePoint;
  if (name == "satisfying_point_masses") return SupportStrategy::kSatisfyingPointMasses;
  if (name == "symmetrized_orbits") return SupportStrategy::kSymmetrizedOrbits;
  if (name == "custom") return SupportStrategy::kCustom;
  throw Error("unknown strategy '" + name + "'");
}

std::optional<FiniteMeasure> vanishing_feasible(const Predicate& f,
                                                const std::vector<CubeDistribution>& support,
                                                SearchReport* report) {
  return solve_vanishing_lp(f, support, false, report);
}

std::optional<FiniteMeasure> charlp_general_search(const Predicate& f,
                                                   const std::vector<CubeDistribution>& support,
                                                   SearchReport* report) {
  return solve_vanishing_lp(f, support, true, report);
}

std::vector<CubeDistribution> point_mass_support(const Predicate& f) {
  std::vector<CubeDistribution> out;
  for (Assignment x : f.satisfying()) out.push_back(CubeDistribution::point_mass(f.arity(), x));
  return out;
}

std::vector<CubeDistribution> symmetrized_orbits(const Predicate& f,
                                                 const std::vector<CubeDistribution>& seeds_in) {
  const int k = f.arity();
  std::vector<CubeDistribution> seeds = seeds_in;
  if (seeds.empty()) {
    seeds = point_mass_support(f);
    auto sat = f.satisfying();
    auto sum = [k](Assignment x) {
      int s = 0;
      for (int i = 0; i < k; ++i) s += coordinate(x, i);
      return s;
    };
    for (Assignment x : sat) {
      for (Assignment y : sat) {
        int sx = sum(x), sy = sum(y);
        if (sx <= 0 || sy >= 0) continue;
        Rational lambda(-sy, sx - sy);
        lambda.canonicalize();
        std::vector<Rational> p(f.table_size(), Rational(0));
        p[x] += lambda;
        p[y] += 1 - lambda;
        seeds.push_back(CubeDistribution(k, std::move(p)));
      }
    }
  }
  std::set<std::vector<Rational>> seen;
  std::vector<CubeDistribution> out;
  auto add = [&](const CubeDistribution& nu) {
    if (seen.insert(nu.probs()).second) out.push_back(nu);
  };
  for (const auto& seed : seeds) {
    if (seed.arity() != k) throw Error("seed arity mismatch");
    std::vector<CubeDistribution> orbit;
    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    do {
      for (int neg = 0; neg < 2; ++neg) {
        std::vector<Rational> p(f.table_size(), Rational(0));
        for (Assignment x = 0; x < f.table_size(); ++x) {
          if (sgn(seed[x]) != 0) p[act(x, perm, neg != 0, k)] = seed[x];
        }
        CubeDistribution image(k, std::move(p));
        if (image.supported_on(f)) orbit.push_back(std::move(image));
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    if (orbit.empty()) continue;
    std::vector<Rational> avg(f.table_size(), Rational(0));
    Rational w(1, static_cast<unsigned long>(orbit.size()));
    for (const auto& nu : orbit) {
      add(nu);
      for (Assignment x = 0; x < f.table_size(); ++x) avg[x] += w * nu[x];
    }
    add(CubeDistribution(k, std::move(avg)));
  }
  return out;
}

std::pair<std::optional<FiniteMeasure>, SearchReport> find_vanishing_measure(
    const Predicate& f, SupportStrategy strategy, const std::vector<CubeDistribution>& custom,
    bool first_moments_only) {
  SearchReport report;
  report.strategy = to_string(strategy);
  report.first_moments_only = first_moments_only;
  if (f.num_satisfying() == 0) {
    report.note = "predicate has no satisfying assignment";
    return {std::nullopt, report};
  }
  std::vector<CubeDistribution> support;
  switch (strategy) {
    case SupportStrategy::kPairwisePoint: {
      auto nu = pairwise_independent_point(f);
      if (!nu) {
        report.note = "no pairwise-independent distribution on f^{-1}(1)";
        return {std::nullopt, report};
      }
      support.push_back(*nu);
      break;
    }
    case SupportStrategy::kSatisfyingPointMasses:
      support = point_mass_support(f);
      break;
    case SupportStrategy::kSymmetrizedOrbits:
      support = symmetrized_orbits(f, custom);
      break;
    case SupportStrategy::kCustom:
      support = custom;
      break;
  }
  if (support.empty()) {
    report.note = "strategy produced an empty support";
    return {std::nullopt, report};
  }
  auto measure = first_moments_only ? charlp_general_search(f, support, &report)
                                    : vanishing_feasible(f, support, &report);
  report.note = measure ? "found" : std::string("not found under strategy ") + report.strategy;
  return {std::move(measure), report};
}

CharLpWitness charlp_symmetric_check(const Predicate& f) {
  if (!is_symmetric(f)) throw Error("charlp_symmetric_check needs a symmetric predicate");
  const int k = f.arity();
  auto sat = f.satisfying();
  // Lexicographic order on the +/- strings, '+' first.
  std::sort(sat.begin(), sat.end(), [k](Assignment a, Assignment b) {
    return assignment_to_string(a, k) < assignment_to_string(b, k);
  });
  CharLpWitness w;
  for (Assignment x : sat) {
    int s = 0;
    for (int i = 0; i < k; ++i) s += coordinate(x, i);
    if (s >= 0 && !w.x) w.x = x;
    if (s <= 0 && !w.y) w.y = x;
  }
  w.member = w.x.has_value() && w.y.has_value();
  if (!w.member) {
    w.x.reset();
    w.y.reset();
  }
  return w;
}

double theta_eval(const FiniteMeasure& lambda, const Rational& delta, int t,
                  const Eigen::MatrixXd& points) {
  const int k = lambda.predicate().arity();
  if (t < 1 || t > k) throw Error("level t out of range");
  if (sgn(delta) <= 0) throw Error("theta_eval needs delta > 0");
  if (points.rows() != t) throw Error("theta_eval needs exactly t points");
  const auto& spectrum = lambda.predicate().spectrum();
  const double per_level = 1.0 / (to_double(factorial(t)) * static_cast<double>(1u << t));
  double total = 0;
  for (SubsetMask s = 1; s < (1u << k); ++s) {
    if (__builtin_popcount(s) != t || sgn(spectrum[s]) == 0) continue;
    std::vector<int> subset = subset_list(s, k);
    const double fs = to_double(spectrum[s]);
    for (const auto& atom : lambda.atoms()) {
      MomentMatrix shifted = noise_shift(atom.zeta, delta);
      const double w = to_double(atom.weight);
      std::vector<int> perm(t);
      std::iota(perm.begin(), perm.end(), 0);
      do {
        for (Assignment bmask = 0; bmask < (1u << t); ++bmask) {
          std::vector<int> signs(t);
          for (int i = 0; i < t; ++i) signs[i] = coordinate(bmask, i);
          MomentMatrix image = restrict_permute_sign(shifted, subset, perm, signs);
          double sign = (__builtin_popcount(bmask) & 1) ? -1.0 : 1.0;
          total += w * fs * sign * per_level * gaussian_density(points, image);
        }
      } while (std::next_permutation(perm.begin(), perm.end()));
    }
  }
  return total;
}

namespace {

nlohmann::json distribution_json(const CubeDistribution& nu) {
  nlohmann::json d = nlohmann::json::object();
  for (Assignment x = 0; x < nu.probs().size(); ++x) {
    if (sgn(nu[x]) != 0) d[assignment_to_string(x, nu.arity())] = nu[x].get_str();
  }
  return d;
}

}  // namespace

std::string serialize_measure(const FiniteMeasure& lambda) {
  nlohmann::json j;
  j["predicate"] = nlohmann::json::parse(serialize_predicate(lambda.predicate()));
  j["atoms"] = nlohmann::json::array();
  for (const auto& atom : lambda.atoms()) {
    j["atoms"].push_back({{"weight", atom.weight.get_str()}, {"distribution", distribution_json(atom.nu)}});
  }
  return j.dump();
}

FiniteMeasure parse_measure(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("measure file is not valid JSON: ") + e.what());
  }
  if (!j.contains("predicate") || !j.contains("atoms") || !j["atoms"].is_array()) {
    throw Error("measure file needs fields predicate and atoms");
  }
  Predicate f = parse_predicate(j["predicate"].dump());
  std::vector<std::pair<Rational, CubeDistribution>> atoms;
  for (const auto& a : j["atoms"]) {
    if (!a.contains("weight") || !a.contains("distribution")) {
      throw Error("measure atom needs weight and distribution");
    }
    std::vector<Rational> p(f.table_size(), Rational(0));
    for (const auto& [key, value] : a["distribution"].items()) {
      Assignment x = assignment_from_string(key, f.arity());
      if (sgn(p[x]) != 0) throw Error("duplicate assignment in distribution");
      p[x] = parse_rational(value.get<std::string>());
    }
    atoms.push_back({parse_rational(a["weight"].get<std::string>()),
                     CubeDistribution(f.arity(), std::move(p))});
  }
  return FiniteMeasure(std::move(f), atoms);
}

}  // namespace reslab
