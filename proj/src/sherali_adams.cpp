#include "reslab/sherali_adams.hpp"

#include <algorithm>
#include <set>

#include "json.hpp"

namespace reslab {

void LocalDistributionFamily::set(std::vector<int> vars, std::vector<Rational> probs) {
  if (!std::is_sorted(vars.begin(), vars.end()) ||
      std::adjacent_find(vars.begin(), vars.end()) != vars.end()) {
    throw Error("local distribution keys must be sorted and distinct");
  }
  if (vars.size() > 30 || probs.size() != (std::size_t{1} << vars.size())) {
    throw Error("local distribution needs 2^|S| weights");
  }
  Rational total(0);
  for (const auto& p : probs) {
    if (sgn(p) < 0) throw Error("negative local probability");
    total += p;
  }
  if (total != 1) throw Error("local distribution does not sum to 1");
  dists_[std::move(vars)] = std::move(probs);
}

const std::vector<Rational>* LocalDistributionFamily::find(const std::vector<int>& vars) const {
  auto it = dists_.find(vars);
  return it == dists_.end() ? nullptr : &it->second;
}

std::vector<Rational> marginalize(const std::vector<int>& s, const std::vector<Rational>& p,
                                  const std::vector<int>& t) {
  std::vector<int> pos;
  for (int v : t) {
    auto it = std::lower_bound(s.begin(), s.end(), v);
    if (it == s.end() || *it != v) throw Error("marginal target is not a subset");
    pos.push_back(static_cast<int>(it - s.begin()));
  }
  std::vector<Rational> out(std::size_t{1} << t.size(), Rational(0));
  for (std::size_t a = 0; a < p.size(); ++a) {
    if (sgn(p[a]) == 0) continue;
    std::size_t b = 0;
    for (std::size_t i = 0; i < pos.size(); ++i) b |= ((a >> pos[i]) & 1u) << i;
    out[b] += p[a];
  }
  return out;
}

std::vector<int> constraint_support(const Constraint& c) {
  std::vector<int> s = c.vars;
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

std::vector<std::vector<int>> downward_closure(const CspInstance& phi,
                                               const std::vector<std::vector<int>>& extra) {
  std::set<std::vector<int>> sets;
  auto add_all = [&](const std::vector<int>& s) {
    for (std::size_t m = 1; m < (std::size_t{1} << s.size()); ++m) {
      std::vector<int> sub;
      for (std::size_t i = 0; i < s.size(); ++i) {
        if ((m >> i) & 1u) sub.push_back(s[i]);
      }
      sets.insert(std::move(sub));
    }
  };
  for (const auto& c : phi.constraints()) add_all(constraint_support(c));
  for (auto s : extra) {
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    add_all(s);
  }
  return {sets.begin(), sets.end()};
}

LocalDistributionFamily LocalDistributionFamily::integral(const CspInstance& phi, FullAssignment x,
                                                          int r) {
  LocalDistributionFamily fam;
  fam.r = r;
  for (const auto& s : downward_closure(phi, {})) {
    std::vector<Rational> p(std::size_t{1} << s.size(), Rational(0));
    std::size_t a = 0;
    for (std::size_t i = 0; i < s.size(); ++i) a |= ((x >> s[i]) & 1u) << i;
    p[a] = 1;
    fam.set(s, std::move(p));
  }
  return fam;
}

LocalDistributionFamily LocalDistributionFamily::uniform(const std::vector<std::vector<int>>& subsets,
                                                         int r) {
  LocalDistributionFamily fam;
  fam.r = r;
  for (const auto& s : subsets) {
    std::size_t n = std::size_t{1} << s.size();
    fam.set(s, std::vector<Rational>(n, Rational(1, static_cast<unsigned long>(n))));
  }
  return fam;
}

namespace {

void subsets_up_to(int n, int r, int start, std::vector<int>& cur,
                   std::vector<std::vector<int>>& out) {
  out.push_back(cur);
  if (static_cast<int>(cur.size()) == r) return;
  for (int v = start; v < n; ++v) {
    cur.push_back(v);
    subsets_up_to(n, r, v + 1, cur, out);
    cur.pop_back();
  }
}

// Table index of the literal tuple of constraint c when the variables of
// its support s take the values encoded by alpha.
Assignment literal_from_local(const Constraint& c, const std::vector<int>& s, std::size_t alpha) {
  Assignment idx = 0;
  for (std::size_t j = 0; j < c.vars.size(); ++j) {
    auto pos = std::lower_bound(s.begin(), s.end(), c.vars[j]) - s.begin();
    unsigned bit = static_cast<unsigned>((alpha >> pos) & 1u) ^ (c.signs[j] < 0 ? 1u : 0u);
    idx |= bit << j;
  }
  return idx;
}

}  // namespace

LinearProgram build_sherali_adams(const CspInstance& phi, int r, SaLpLayout* layout) {
  const int k = phi.predicate().arity();
  if (r < k) throw Error("Sherali-Adams needs r >= k");
  const int n = phi.num_vars();
  std::vector<std::vector<int>> subsets;
  std::vector<int> cur;
  subsets_up_to(n, r, 0, cur, subsets);

  std::uint64_t num_vars = 0, num_rows = 1;
  for (const auto& s : subsets) {
    num_vars += std::uint64_t{1} << s.size();
    num_rows += s.size() * (std::uint64_t{1} << (s.size() == 0 ? 0 : s.size() - 1));
  }
  if (num_rows * (num_vars + num_rows) > size_budget()) {
    throw Error("Sherali-Adams LP with " + std::to_string(num_vars) + " variables and " +
                std::to_string(num_rows) + " rows exceeds the size budget");
  }

  LinearProgram lp;
  SaLpLayout local;
  local.r = r;
  for (const auto& s : subsets) {
    local.offset[s] = lp.num_vars;
    for (std::size_t a = 0; a < (std::size_t{1} << s.size()); ++a) lp.add_variable();
  }
  lp.add_constraint({{local.offset.at({}), Rational(1)}}, Relation::kEqual, 1);
  for (const auto& s : subsets) {
    if (s.empty()) continue;
    const int base_s = local.offset.at(s);
    for (std::size_t e = 0; e < s.size(); ++e) {
      std::vector<int> t = s;
      t.erase(t.begin() + e);
      const int base_t = local.offset.at(t);
      for (std::size_t beta = 0; beta < (std::size_t{1} << t.size()); ++beta) {
        // Insert bit e into beta.
        std::size_t low = beta & ((std::size_t{1} << e) - 1);
        std::size_t high = (beta >> e) << (e + 1);
        std::size_t a0 = high | low;
        std::size_t a1 = a0 | (std::size_t{1} << e);
        lp.add_constraint({{base_s + static_cast<int>(a0), Rational(1)},
                           {base_s + static_cast<int>(a1), Rational(1)},
                           {base_t + static_cast<int>(beta), Rational(-1)}},
                          Relation::kEqual, 0);
      }
    }
  }
  if (phi.size() > 0) {
    Rational w(1, static_cast<unsigned long>(phi.size()));
    for (const auto& c : phi.constraints()) {
      std::vector<int> s = constraint_support(c);
      const int base = local.offset.at(s);
      for (std::size_t a = 0; a < (std::size_t{1} << s.size()); ++a) {
        if (phi.predicate()(literal_from_local(c, s, a))) lp.objective[base + a] += w;
      }
    }
  }
  if (layout != nullptr) *layout = std::move(local);
  return lp;
}

LocalDistributionFamily family_from_solution(const SaLpLayout& layout,
                                             const std::vector<Rational>& primal) {
  LocalDistributionFamily fam;
  fam.r = layout.r;
  for (const auto& [s, base] : layout.offset) {
    if (s.empty()) continue;
    std::vector<Rational> p(primal.begin() + base, primal.begin() + base + (1 << s.size()));
    fam.set(s, std::move(p));
  }
  return fam;
}

Rational sa_objective(const CspInstance& phi, const LocalDistributionFamily& fam) {
  if (phi.size() == 0) return 1;
  Rational total(0);
  for (const auto& c : phi.constraints()) {
    std::vector<int> s = constraint_support(c);
    const auto* p = fam.find(s);
    if (p == nullptr) throw Error("family is missing a constraint support");
    for (std::size_t a = 0; a < p->size(); ++a) {
      if (phi.predicate()(literal_from_local(c, s, a))) total += (*p)[a];
    }
  }
  return total / Rational(static_cast<unsigned long>(phi.size()));
}

ConsistencyReport verify_consistency(const LocalDistributionFamily& fam) {
  ConsistencyReport rep;
  rep.max_violation = 0;
  for (const auto& [s, p] : fam.dists()) {
    for (std::size_t m = 1; m + 1 < (std::size_t{1} << s.size()); ++m) {
      std::vector<int> t;
      for (std::size_t i = 0; i < s.size(); ++i) {
        if ((m >> i) & 1u) t.push_back(s[i]);
      }
      const auto* pt = fam.find(t);
      if (pt == nullptr) continue;
      ++rep.pairs_checked;
      auto marg = marginalize(s, p, t);
      for (std::size_t b = 0; b < marg.size(); ++b) {
        Rational diff = abs(marg[b] - (*pt)[b]);
        if (diff > rep.max_violation) {
          rep.max_violation = diff;
          rep.worst_s = s;
          rep.worst_t = t;
        }
      }
    }
  }
  return rep;
}

CorrectionResult correct_local_distributions(const LocalDistributionFamily& fam) {
  // Variables: p, q >= 0 per (S, alpha) with new = old + p - q.
  std::map<std::vector<int>, int> offset;
  int n = 0;
  for (const auto& [s, probs] : fam.dists()) {
    offset[s] = n;
    n += static_cast<int>(probs.size());
  }
  LinearProgram lp;
  for (int i = 0; i < 2 * n; ++i) lp.add_variable(Rational(0), std::nullopt, Rational(-1));
  auto p_var = [&](int i) { return i; };
  auto q_var = [&](int i) { return n + i; };

  for (const auto& [s, probs] : fam.dists()) {
    const int base = offset.at(s);
    for (std::size_t a = 0; a < probs.size(); ++a) {
      int i = base + static_cast<int>(a);
      lp.add_constraint({{q_var(i), Rational(1)}, {p_var(i), Rational(-1)}}, Relation::kLessEqual,
                        probs[a]);
    }
  }
  for (const auto& [s, probs] : fam.dists()) {
    const int base = offset.at(s);
    std::vector<std::pair<int, Rational>> terms;
    for (std::size_t a = 0; a < probs.size(); ++a) {
      terms.push_back({p_var(base + static_cast<int>(a)), Rational(1)});
      terms.push_back({q_var(base + static_cast<int>(a)), Rational(-1)});
    }
    lp.add_constraint(std::move(terms), Relation::kEqual, 0);
    for (std::size_t m = 1; m + 1 < (std::size_t{1} << s.size()); ++m) {
      std::vector<int> t;
      std::vector<int> pos;
      for (std::size_t i = 0; i < s.size(); ++i) {
        if ((m >> i) & 1u) {
          t.push_back(s[i]);
          pos.push_back(static_cast<int>(i));
        }
      }
      const auto* pt = fam.find(t);
      if (pt == nullptr) continue;
      const int base_t = offset.at(t);
      auto marg = marginalize(s, probs, t);
      std::vector<std::vector<std::pair<int, Rational>>> rows(pt->size());
      for (std::size_t a = 0; a < probs.size(); ++a) {
        std::size_t b = 0;
        for (std::size_t i = 0; i < pos.size(); ++i) b |= ((a >> pos[i]) & 1u) << i;
        rows[b].push_back({p_var(base + static_cast<int>(a)), Rational(1)});
        rows[b].push_back({q_var(base + static_cast<int>(a)), Rational(-1)});
      }
      for (std::size_t b = 0; b < rows.size(); ++b) {
        rows[b].push_back({p_var(base_t + static_cast<int>(b)), Rational(-1)});
        rows[b].push_back({q_var(base_t + static_cast<int>(b)), Rational(1)});
        lp.add_constraint(std::move(rows[b]), Relation::kEqual, (*pt)[b] - marg[b]);
      }
    }
  }
  const std::uint64_t rows = lp.constraints.size();
  if (rows * (rows + 2 * static_cast<std::uint64_t>(n)) > size_budget()) {
    throw Error("consistency-correction LP exceeds the size budget");
  }
  auto res = lp_solve(lp);
  if (res.status != LpStatus::kOptimal) throw Error("consistency-correction LP is infeasible");

  CorrectionResult out;
  out.family.r = fam.r;
  out.total_l1 = 0;
  out.max_subset_l1 = 0;
  out.pivots = res.pivots;
  for (const auto& [s, probs] : fam.dists()) {
    const int base = offset.at(s);
    std::vector<Rational> fixed(probs.size());
    Rational l1(0);
    for (std::size_t a = 0; a < probs.size(); ++a) {
      int i = base + static_cast<int>(a);
      fixed[a] = probs[a] + res.primal[p_var(i)] - res.primal[q_var(i)];
      l1 += abs(fixed[a] - probs[a]);
    }
    out.total_l1 += l1;
    if (l1 > out.max_subset_l1) out.max_subset_l1 = l1;
    out.family.set(s, std::move(fixed));
  }
  return out;
}

std::string serialize_family(const LocalDistributionFamily& fam) {
  nlohmann::json j;
  j["r"] = fam.r;
  j["dists"] = nlohmann::json::array();
  for (const auto& [s, probs] : fam.dists()) {
    nlohmann::json p = nlohmann::json::object();
    for (std::size_t a = 0; a < probs.size(); ++a) {
      if (sgn(probs[a]) != 0) p[assignment_to_string(static_cast<Assignment>(a), s.size())] = probs[a].get_str();
    }
    j["dists"].push_back({{"vars", s}, {"probs", p}});
  }
  return j.dump();
}

LocalDistributionFamily parse_family(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("family file is not valid JSON: ") + e.what());
  }
  if (!j.contains("dists") || !j["dists"].is_array()) throw Error("family file needs dists");
  LocalDistributionFamily fam;
  fam.r = j.value("r", 0);
  for (const auto& d : j["dists"]) {
    auto vars = d.at("vars").get<std::vector<int>>();
    std::vector<Rational> p(std::size_t{1} << vars.size(), Rational(0));
    for (const auto& [key, value] : d.at("probs").items()) {
      p[assignment_from_string(key, static_cast<int>(vars.size()))] =
          parse_rational(value.get<std::string>());
    }
    fam.set(std::move(vars), std::move(p));
  }
  return fam;
}

}  // namespace reslab
