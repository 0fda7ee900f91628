#include "reslab/basic_relaxation.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "json.hpp"

namespace reslab {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

const std::vector<double>& vec(const BasicSolution& sol, int v, int b) {
  return b > 0 ? sol.plus[v] : sol.minus[v];
}

}  // namespace

BasicVerification verify_basic_solution(const CspInstance& phi, const BasicSolution& sol,
                                        double tol) {
  BasicVerification rep;
  rep.tol = tol;
  const int n = phi.num_vars();
  const int k = phi.predicate().arity();
  if (sol.num_vars() != n || static_cast<int>(sol.minus.size()) != n) {
    throw Error("solution does not have vectors for every variable");
  }
  if (sol.local.size() != phi.size()) throw Error("solution needs one distribution per constraint");
  for (int v = 0; v < n; ++v) {
    if (static_cast<int>(sol.plus[v].size()) != sol.dim() ||
        static_cast<int>(sol.minus[v].size()) != sol.dim()) {
      throw Error("solution vectors have inconsistent dimensions");
    }
  }
  rep.unit_norm_error = std::fabs(dot(sol.unit, sol.unit) - 1);
  for (int v = 0; v < n; ++v) {
    rep.max_orthogonality = std::max(rep.max_orthogonality, std::fabs(dot(sol.plus[v], sol.minus[v])));
    for (int c = 0; c < sol.dim(); ++c) {
      rep.max_sum_identity = std::max(
          rep.max_sum_identity, std::fabs(sol.plus[v][c] + sol.minus[v][c] - sol.unit[c]));
    }
  }
  Rational frac(0);
  for (std::size_t ci = 0; ci < phi.size(); ++ci) {
    const auto& con = phi.constraint(ci);
    const auto& p = sol.local[ci];
    if (p.size() != (std::size_t{1} << k)) throw Error("local distribution needs 2^k weights");
    Rational total(0);
    bool negative = false;
    for (const auto& w : p) {
      total += w;
      negative |= sgn(w) < 0;
    }
    rep.max_normalization = std::max(rep.max_normalization, std::fabs(to_double(total - 1)));
    if (negative) rep.max_normalization = std::max(rep.max_normalization, 1.0);
    std::vector<double> pd(p.size());
    for (std::size_t a = 0; a < p.size(); ++a) {
      pd[a] = to_double(p[a]);
      Assignment lit = 0;
      for (int j = 0; j < k; ++j) {
        unsigned bit = static_cast<unsigned>((a >> j) & 1u) ^ (con.signs[j] < 0 ? 1u : 0u);
        lit |= bit << j;
      }
      if (phi.predicate()(lit)) frac += p[a];
    }
    for (int j = 0; j < k; ++j) {
      for (int b : {1, -1}) {
        double marg = 0;
        for (std::size_t a = 0; a < pd.size(); ++a) {
          if (coordinate(static_cast<Assignment>(a), j) == b) marg += pd[a];
        }
        double ip = dot(vec(sol, con.vars[j], b), sol.unit);
        rep.max_singleton = std::max(rep.max_singleton, std::fabs(ip - marg));
      }
      for (int l = j + 1; l < k; ++l) {
        for (int b : {1, -1}) {
          for (int bp : {1, -1}) {
            double marg = 0;
            for (std::size_t a = 0; a < pd.size(); ++a) {
              if (coordinate(static_cast<Assignment>(a), j) == b &&
                  coordinate(static_cast<Assignment>(a), l) == bp) {
                marg += pd[a];
              }
            }
            double ip = dot(vec(sol, con.vars[j], b), vec(sol, con.vars[l], bp));
            rep.max_pair = std::max(rep.max_pair, std::fabs(ip - marg));
          }
        }
      }
    }
  }
  rep.frac = phi.size() == 0 ? Rational(1) : frac / Rational(static_cast<unsigned long>(phi.size()));
  rep.passes = rep.unit_norm_error <= tol && rep.max_orthogonality <= tol &&
               rep.max_sum_identity <= tol && rep.max_singleton <= tol && rep.max_pair <= tol &&
               rep.max_normalization <= tol;
  return rep;
}

BasicSolution integral_embedding(const CspInstance& phi, FullAssignment x) {
  BasicSolution sol;
  const int n = phi.num_vars();
  const int k = phi.predicate().arity();
  sol.unit = {1.0};
  for (int v = 0; v < n; ++v) {
    bool minus = (x >> v) & 1u;
    sol.plus.push_back({minus ? 0.0 : 1.0});
    sol.minus.push_back({minus ? 1.0 : 0.0});
  }
  for (const auto& con : phi.constraints()) {
    std::vector<Rational> p(std::size_t{1} << k, Rational(0));
    Assignment a = 0;
    for (int j = 0; j < k; ++j) a |= static_cast<Assignment>((x >> con.vars[j]) & 1u) << j;
    p[a] = 1;
    sol.local.push_back(std::move(p));
  }
  return sol;
}

BasicSolution distribution_embedding(const CspInstance& phi,
                                     const std::vector<std::vector<Rational>>& local) {
  const int n = phi.num_vars();
  const int k = phi.predicate().arity();
  const int block = 1 << k;
  if (local.size() != phi.size()) throw Error("need one distribution per constraint");
  std::vector<int> owner(n, -1);
  for (std::size_t c = 0; c < phi.size(); ++c) {
    for (int v : phi.constraint(c).vars) {
      if (owner[v] >= 0) throw Error("distribution embedding needs disjoint constraints");
      owner[v] = static_cast<int>(c);
    }
  }
  const int dim = 1 + static_cast<int>(phi.size()) * (block - 1);
  BasicSolution sol;
  sol.unit.assign(dim, 0.0);
  sol.unit[0] = 1.0;
  sol.plus.assign(n, sol.unit);
  sol.minus.assign(n, std::vector<double>(dim, 0.0));
  for (std::size_t c = 0; c < phi.size(); ++c) {
    const auto& p = local[c];
    if (p.size() != static_cast<std::size_t>(block)) throw Error("local distribution size");
    Eigen::VectorXd u(block);
    for (int a = 0; a < block; ++a) u(a) = std::sqrt(to_double(p[a]));
    // Householder reflection H with H u = e_0.
    Eigen::VectorXd w = u - Eigen::VectorXd::Unit(block, 0);
    const double wn = w.squaredNorm();
    auto reflect = [&](const Eigen::VectorXd& y) -> Eigen::VectorXd {
      if (wn < 1e-300) return y;
      return y - 2.0 * w * (w.dot(y) / wn);
    };
    const auto& con = phi.constraint(c);
    for (int j = 0; j < k; ++j) {
      for (int b : {1, -1}) {
        Eigen::VectorXd y(block);
        for (int a = 0; a < block; ++a) {
          y(a) = coordinate(static_cast<Assignment>(a), j) == b ? u(a) : 0.0;
        }
        Eigen::VectorXd h = reflect(y);
        std::vector<double> out(dim, 0.0);
        out[0] = h(0);
        for (int a = 1; a < block; ++a) out[1 + c * (block - 1) + (a - 1)] = h(a);
        (b > 0 ? sol.plus : sol.minus)[con.vars[j]] = std::move(out);
      }
    }
  }
  sol.local = local;
  return sol;
}

std::string serialize_basic_solution(const BasicSolution& sol) {
  nlohmann::json j;
  j["dimension"] = sol.dim();
  j["unit"] = sol.unit;
  j["vectors"] = nlohmann::json::array();
  for (int v = 0; v < sol.num_vars(); ++v) {
    j["vectors"].push_back({{"plus", sol.plus[v]}, {"minus", sol.minus[v]}});
  }
  j["local"] = nlohmann::json::array();
  for (const auto& p : sol.local) {
    int k = 0;
    while ((std::size_t{1} << k) < p.size()) ++k;
    nlohmann::json d = nlohmann::json::object();
    for (std::size_t a = 0; a < p.size(); ++a) {
      if (sgn(p[a]) != 0) d[assignment_to_string(static_cast<Assignment>(a), k)] = p[a].get_str();
    }
    j["local"].push_back(d);
  }
  return j.dump();
}

BasicSolution parse_basic_solution(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("solution file is not valid JSON: ") + e.what());
  }
  BasicSolution sol;
  try {
    sol.unit = j.at("unit").get<std::vector<double>>();
    for (const auto& v : j.at("vectors")) {
      sol.plus.push_back(v.at("plus").get<std::vector<double>>());
      sol.minus.push_back(v.at("minus").get<std::vector<double>>());
    }
    for (const auto& d : j.at("local")) {
      int k = -1;
      std::vector<std::pair<Assignment, Rational>> entries;
      for (const auto& [key, value] : d.items()) {
        if (k < 0) k = static_cast<int>(key.size());
        entries.push_back({assignment_from_string(key, k), parse_rational(value.get<std::string>())});
      }
      if (k < 0) throw Error("empty local distribution");
      std::vector<Rational> p(std::size_t{1} << k, Rational(0));
      for (auto& [a, w] : entries) p[a] = w;
      sol.local.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed solution file: ") + e.what());
  }
  return sol;
}

}  // namespace reslab
