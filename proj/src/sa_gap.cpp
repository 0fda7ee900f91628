#include "reslab/sa_gap.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include "json.hpp"
#include <numeric>
#include <random>

namespace reslab {

int SaGapConfig::layers() const {
  Rational inv = 1 / epsilon;
  mpz_class s;
  mpz_cdiv_q(s.get_mpz_t(), inv.get_num_mpz_t(), inv.get_den_mpz_t());
  return static_cast<int>(s.get_si()) + 1;
}

std::size_t SaGapConfig::num_constraints() const {
  Rational m = density * n;
  mpz_class c;
  mpz_cdiv_q(c.get_mpz_t(), m.get_num_mpz_t(), m.get_den_mpz_t());
  return static_cast<std::size_t>(c.get_ui());
}

void SaGapConfig::validate() const {
  if (!lambda || lambda->size() == 0) throw Error("SA gap generator needs a nonempty measure");
  if (!(lambda->predicate() == f)) throw Error("measure predicate does not match the config");
  if (sgn(epsilon) <= 0 || epsilon > 1) throw Error("epsilon must lie in (0,1]");
  if (n < 1) throw Error("need at least one variable per layer");
  if (sgn(density) <= 0) throw Error("constraint density must be positive");
  if (sgn(eta) <= 0 || eta >= 1) throw Error("eta must lie in (0,1)");
  if (d_ball < 0 || d_ball % 2 != 0) throw Error("ball radius d must be even");
  if (r < 1) throw Error("round count r must be positive");
  if (sgn(delta) <= 0 || delta >= 1) throw Error("delta must lie in (0,1)");
  if (delta * delta < epsilon) throw Error("delta must be at least sqrt(epsilon)");
  if (static_cast<double>(layers()) * n > 4e6) throw Error("too many variables");
}

int layer_of(const Rational& abs_bias, int s) {
  if (sgn(abs_bias) < 0 || abs_bias > 1) throw Error("bias magnitude outside [0,1]");
  if (sgn(abs_bias) == 0) return 0;
  Rational scaled = abs_bias * s;
  mpz_class c;
  mpz_cdiv_q(c.get_mpz_t(), scaled.get_num_mpz_t(), scaled.get_den_mpz_t());
  return static_cast<int>(c.get_si());
}

Rational layer_representative(int layer, int s) {
  if (layer == 0) return 0;
  Rational t(2 * layer - 1, 2 * s);
  t.canonicalize();
  return t;
}

std::vector<int> SaGapInstance::active_layers() const {
  std::vector<bool> seen(representatives.size(), false);
  for (const auto& c : phi.constraints()) {
    for (int v : c.vars) seen[layer_of_var(v)] = true;
  }
  std::vector<int> out;
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (seen[i]) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::size_t SaGapInstance::active_variables() const {
  return active_layers().size() * static_cast<std::size_t>(config.n);
}

BiasCorrection bias_correct_nu(const CubeDistribution& nu, const std::vector<Rational>& targets) {
  const int k = nu.arity();
  if (static_cast<int>(targets.size()) != k) throw Error("one target bias per coordinate");
  std::vector<Rational> probs = nu.probs();
  std::vector<Rational> bias(k);
  for (int j = 0; j < k; ++j) bias[j] = nu.bias(j);
  BiasCorrection out;
  out.l1 = 0;
  out.tau.assign(k, Rational(0));
  const std::size_t size = probs.size();
  for (int j = 0; j < k; ++j) {
    const Rational& target = targets[j];
    if (abs(target) >= 1) throw Error("target bias " + to_string(target) + " is unreachable");
    if (target == bias[j]) continue;
    const int sigma = target > bias[j] ? 1 : -1;
    if (bias[j] == sigma) throw Error("coordinate already deterministic; target unreachable");
    Rational tau = (target - bias[j]) / (sigma - bias[j]);
    tau.canonicalize();
    // D_j: independent bits at the current biases, bit j fixed to sigma.
    std::vector<Rational> mixed(size);
    Rational moved = 0;
    for (Assignment x = 0; x < size; ++x) {
      Rational d = 1;
      if (coordinate(x, j) != sigma) {
        d = 0;
      } else {
        for (int l = 0; l < k; ++l) {
          if (l != j) d *= (1 + coordinate(x, l) * bias[l]) / 2;
        }
      }
      mixed[x] = (1 - tau) * probs[x] + tau * d;
      mixed[x].canonicalize();
      moved += abs(mixed[x] - probs[x]);
    }
    probs = std::move(mixed);
    bias[j] = target;
    out.tau[j] = tau;
    out.l1 += moved;
  }
  out.nu = CubeDistribution(k, std::move(probs));
  out.l1.canonicalize();
  return out;
}

SaGapInstance generate_sa_instance(const SaGapConfig& cfg) {
  cfg.validate();
  const Predicate& f = cfg.f;
  const int k = f.arity();
  SaGapInstance inst{cfg, cfg.layers() - 1, {}, CspInstance(f, 0, {}), {}};
  const int s = inst.s;
  for (int i = 0; i <= s; ++i) inst.representatives.push_back(layer_representative(i, s));

  // Per-atom data is deterministic; only the sampling below is random.
  const auto& atoms = cfg.lambda->atoms();
  std::vector<ConstraintProvenance> per_atom;
  std::vector<double> weights;
  const auto uniform = CubeDistribution::uniform(k);
  for (std::size_t a = 0; a < atoms.size(); ++a) {
    ConstraintProvenance p;
    p.atom = a;
    std::vector<Rational> targets(k);
    for (int j = 0; j < k; ++j) {
      Rational z = (1 - cfg.delta) * atoms[a].nu.bias(j);
      z.canonicalize();
      p.zeta.push_back(z);
      p.layers.push_back(layer_of(abs(z), s));
      targets[j] = sgn(z) * inst.representatives[p.layers[j]];
    }
    p.nu_bar = atoms[a].nu.mix(uniform, cfg.delta);
    auto corrected = bias_correct_nu(p.nu_bar, targets);
    p.nu_corrected = corrected.nu;
    p.correction_l1 = corrected.l1;
    per_atom.push_back(std::move(p));
    weights.push_back(to_double(atoms[a].weight));
  }

  Rng rng = make_rng(cfg.seed, 0);
  std::discrete_distribution<std::size_t> pick_atom(weights.begin(), weights.end());
  std::uniform_int_distribution<int> pick_var(0, cfg.n - 1);
  std::bernoulli_distribution coin(0.5);
  std::vector<Constraint> constraints;
  const std::size_t m = cfg.num_constraints();
  for (std::size_t c = 0; c < m; ++c) {
    const auto& p = per_atom[pick_atom(rng)];
    Constraint con;
    for (int j = 0; j < k; ++j) {
      con.vars.push_back(p.layers[j] * cfg.n + pick_var(rng));
      const int sign = sgn(p.zeta[j]);
      con.signs.push_back(sign < 0 ? -1 : sign > 0 ? 1 : (coin(rng) ? -1 : 1));
    }
    constraints.push_back(std::move(con));
    inst.provenance.push_back(p);
  }
  inst.phi = CspInstance(f, (s + 1) * cfg.n, std::move(constraints));
  return inst;
}

namespace {

// Constraint-variable multigraph: vertices 0..m-1 are constraints, m.. are
// variables; edge c*k+j joins constraint c and its j-th variable.
struct Multigraph {
  int m = 0;
  int n = 0;
  int k = 0;
  std::vector<std::vector<int>> var_edges;
  std::vector<int> edge_var;
  std::vector<bool> alive;

  explicit Multigraph(const CspInstance& phi)
      : m(static_cast<int>(phi.size())), n(phi.num_vars()), k(phi.predicate().arity()) {
    var_edges.assign(n, {});
    edge_var.assign(static_cast<std::size_t>(m) * k, 0);
    alive.assign(m, true);
    for (int c = 0; c < m; ++c) {
      for (int j = 0; j < k; ++j) {
        const int v = phi.constraint(c).vars[j];
        edge_var[c * k + j] = v;
        var_edges[v].push_back(c * k + j);
      }
    }
  }

  int other(int e, int u) const { return u < m ? m + edge_var[e] : e / k; }

  template <class Visit>
  void for_edges(int u, Visit&& visit) const {
    if (u < m) {
      for (int j = 0; j < k; ++j) visit(u * k + j);
    } else {
      for (int e : var_edges[u - m]) {
        if (alive[e / k]) visit(e);
      }
    }
  }
};

struct CycleHit {
  int length = 0;
  std::vector<int> constraints;
};

// Shortest closed walk through a non-tree edge found by BFS from root, up to
// length `limit`. Minimizing over roots gives the girth.
std::optional<CycleHit> bfs_cycle(const Multigraph& g, int root, int limit,
                                  std::vector<int>& dist, std::vector<int>& parent_edge,
                                  std::vector<int>& touched) {
  for (int v : touched) {
    dist[v] = -1;
    parent_edge[v] = -1;
  }
  touched.clear();
  std::deque<int> queue{root};
  dist[root] = 0;
  touched.push_back(root);
  int best = limit + 1;
  int best_u = -1;
  int best_w = -1;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    if (2 * dist[u] + 1 >= best) break;
    g.for_edges(u, [&](int e) {
      if (e == parent_edge[u]) return;
      const int w = g.other(e, u);
      if (dist[w] < 0) {
        dist[w] = dist[u] + 1;
        parent_edge[w] = e;
        touched.push_back(w);
        queue.push_back(w);
      } else {
        const int len = dist[u] + dist[w] + 1;
        if (len < best) {
          best = len;
          best_u = u;
          best_w = w;
        }
      }
    });
  }
  if (best_u < 0) return std::nullopt;
  CycleHit hit;
  hit.length = best;
  for (int x : {best_u, best_w}) {
    while (true) {
      if (x < g.m) hit.constraints.push_back(x);
      if (x == root) break;
      x = g.other(parent_edge[x], x);
    }
  }
  std::sort(hit.constraints.begin(), hit.constraints.end());
  hit.constraints.erase(std::unique(hit.constraints.begin(), hit.constraints.end()),
                        hit.constraints.end());
  return hit;
}

}  // namespace

std::optional<int> girth(const CspInstance& phi) {
  Multigraph g(phi);
  const int total = g.m + g.n;
  std::vector<int> dist(total, -1), parent(total, -1), touched;
  int best = std::numeric_limits<int>::max();
  for (int c = 0; c < g.m; ++c) {
    auto hit = bfs_cycle(g, c, best == std::numeric_limits<int>::max() ? total * 2 : best - 1,
                         dist, parent, touched);
    if (hit) best = std::min(best, hit->length);
  }
  if (best == std::numeric_limits<int>::max()) return std::nullopt;
  return best;
}

PruneResult prune_girth(const CspInstance& phi, int g_target) {
  Multigraph g(phi);
  const int total = g.m + g.n;
  std::vector<int> dist(total, -1), parent(total, -1), touched;
  // Shortest cycles first: for each length L, sweep the roots and cut every
  // cycle of length L through them.
  for (int length = 2; length <= g_target; length += 2) {
    for (int c = 0; c < g.m; ++c) {
      while (g.alive[c]) {
        auto hit = bfs_cycle(g, c, length, dist, parent, touched);
        if (!hit) break;
        g.alive[hit->constraints.back()] = false;
      }
    }
  }
  PruneResult out{CspInstance(phi.predicate(), phi.num_vars(), {}), {}, 0, 0, std::nullopt};
  std::vector<Constraint> kept;
  for (int c = 0; c < g.m; ++c) {
    if (g.alive[c]) {
      kept.push_back(phi.constraint(c));
      out.kept.push_back(static_cast<std::size_t>(c));
    }
  }
  out.removed = phi.size() - kept.size();
  out.removed_fraction = phi.size() ? static_cast<double>(out.removed) / phi.size() : 0.0;
  out.phi = CspInstance(phi.predicate(), phi.num_vars(), std::move(kept));
  out.girth_after = girth(out.phi);
  return out;
}

SaGapInstance prune_instance(const SaGapInstance& inst, int g_target, PruneResult* result) {
  PruneResult pr = prune_girth(inst.phi, g_target);
  SaGapInstance out{inst.config, inst.s, inst.representatives, pr.phi, {}};
  for (std::size_t c : pr.kept) out.provenance.push_back(inst.provenance[c]);
  if (result) *result = std::move(pr);
  return out;
}

CubeDistribution smoothed_constraint_distribution(const SaGapInstance& inst, std::size_t c) {
  const Constraint& con = inst.phi.constraint(c);
  const int k = inst.phi.predicate().arity();
  Assignment flip = 0;
  for (int j = 0; j < k; ++j) {
    if (con.signs[j] < 0) flip |= 1U << j;
  }
  const Rational& eta = inst.config.eta;
  const Rational uniform(1, 1 << k);
  const auto& lit = inst.provenance[c].nu_corrected;
  std::vector<Rational> probs(std::size_t{1} << k);
  for (Assignment x = 0; x < probs.size(); ++x) {
    probs[x] = (1 - eta) * lit[x ^ flip] + eta * uniform;
    probs[x].canonicalize();
  }
  return CubeDistribution(k, std::move(probs));
}

BallInfo ball_around(const CspInstance& phi, const std::vector<int>& vars, int radius) {
  Multigraph g(phi);
  const int total = g.m + g.n;
  std::vector<int> dist(total, -1);
  std::deque<int> queue;
  for (int v : vars) {
    if (v < 0 || v >= g.n) throw Error("ball center out of range");
    if (dist[g.m + v] < 0) {
      dist[g.m + v] = 0;
      queue.push_back(g.m + v);
    }
  }
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    if (dist[u] == radius) continue;
    g.for_edges(u, [&](int e) {
      const int w = g.other(e, u);
      if (dist[w] < 0) {
        dist[w] = dist[u] + 1;
        queue.push_back(w);
      }
    });
  }
  BallInfo info;
  std::vector<int> degree(total, 0);
  for (int c = 0; c < g.m; ++c) {
    degree[c] = g.k;
    for (int j = 0; j < g.k; ++j) ++degree[g.m + g.edge_var[c * g.k + j]];
  }
  std::vector<int> uf(total);
  std::iota(uf.begin(), uf.end(), 0);
  std::function<int(int)> find = [&](int x) { return uf[x] == x ? x : uf[x] = find(uf[x]); };
  std::size_t edges = 0;
  std::size_t vertices = 0;
  std::size_t merges = 0;
  for (int u = 0; u < total; ++u) {
    if (dist[u] < 0) continue;
    ++vertices;
    info.max_degree = std::max(info.max_degree, degree[u]);
    if (u < g.m) {
      info.constraints.push_back(static_cast<std::size_t>(u));
      for (int j = 0; j < g.k; ++j) {
        ++edges;
        const int a = find(u);
        const int b = find(g.m + g.edge_var[u * g.k + j]);
        if (a != b) {
          uf[a] = b;
          ++merges;
        }
      }
    } else {
      info.variables.push_back(u - g.m);
    }
  }
  // A forest has exactly (vertices - components) = merges edges.
  info.forest = edges == merges;
  (void)vertices;
  return info;
}

namespace {

// Weight table over the S-variables of a subtree: entry a has bit i set when
// svars[i] = -1.
struct Table {
  std::vector<int> svars;
  std::vector<Rational> w;
};

Table tensor(const Table& a, const Table& b) {
  Table out;
  out.svars = a.svars;
  out.svars.insert(out.svars.end(), b.svars.begin(), b.svars.end());
  out.w.assign(a.w.size() * b.w.size(), Rational(0));
  for (std::size_t j = 0; j < b.w.size(); ++j) {
    if (sgn(b.w[j]) == 0) continue;
    for (std::size_t i = 0; i < a.w.size(); ++i) out.w[i + j * a.w.size()] = a.w[i] * b.w[j];
  }
  return out;
}

void add_into(Table& acc, const Table& t) {
  if (acc.w.empty()) {
    acc = t;
    return;
  }
  for (std::size_t i = 0; i < acc.w.size(); ++i) acc.w[i] += t.w[i];
}

// The ball as a forest with per-constraint U_C.
struct BallForest {
  const SaGapInstance* inst;
  std::map<int, std::vector<std::size_t>> var_constraints;  // ball constraints at each ball var
  std::map<std::size_t, CubeDistribution> u;
  std::vector<bool> in_s;
  std::vector<int> ball_vars;

  BallForest(const SaGapInstance& inst_, const std::vector<int>& s, int radius, bool strict)
      : inst(&inst_) {
    const auto& phi = inst_.phi;
    std::vector<int> sorted = s;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end() || sorted != s) {
      throw Error("subset S must be sorted and distinct");
    }
    BallInfo info = ball_around(phi, s, radius);
    if (!info.forest) throw Error("ball around S is not a forest; prune to a larger girth");
    if (strict) {
      auto g = girth(phi);
      const double bound = g ? *g / std::pow(std::max(1, info.max_degree), radius) : INFINITY;
      if (!(static_cast<double>(s.size()) < bound)) {
        throw Error("size precondition |S| < girth / D^d violated");
      }
    }
    in_s.assign(phi.num_vars(), false);
    for (int v : s) in_s[v] = true;
    ball_vars = info.variables;
    for (int v : ball_vars) var_constraints[v];
    for (std::size_t c : info.constraints) {
      for (int v : phi.constraint(c).vars) var_constraints[v].push_back(c);
      u.emplace(c, smoothed_constraint_distribution(inst_, c));
    }
  }

  Rational p(int v, int value) const {
    const Rational& t = inst->representatives[inst->layer_of_var(v)];
    Rational out = (1 + value * (1 - inst->config.eta) * t) / 2;
    out.canonicalize();
    return out;
  }

  Table base(int v, int value) const {
    Table t;
    if (in_s[v]) {
      t.svars = {v};
      t.w = {value == 1 ? Rational(1) : Rational(0), value == 1 ? Rational(0) : Rational(1)};
    } else {
      t.w = {Rational(1)};
    }
    return t;
  }

  // Sum over the children of constraint c (all variables except `from`) of
  // factor(beta) times their subtree tables.
  Table constraint_table(std::size_t c, int from, int from_value,
                         const std::function<Table(int, std::size_t, int)>& var_table,
                         const std::function<Rational(std::size_t, int, int)>& divisor) const {
    const Constraint& con = inst->phi.constraint(c);
    const int k = static_cast<int>(con.vars.size());
    int from_pos = -1;
    for (int j = 0; j < k; ++j) {
      if (con.vars[j] == from) from_pos = j;
    }
    std::vector<int> child_pos;
    for (int j = 0; j < k; ++j) {
      if (j != from_pos) child_pos.push_back(j);
    }
    std::vector<std::array<Table, 2>> child(child_pos.size());
    for (std::size_t i = 0; i < child_pos.size(); ++i) {
      const int y = con.vars[child_pos[i]];
      child[i][0] = var_table(y, c, 1);
      child[i][1] = var_table(y, c, -1);
    }
    const CubeDistribution& uc = u.at(c);
    const Rational div = from_pos >= 0 ? divisor(c, from_pos, from_value) : Rational(1);
    Table acc;
    for (std::size_t bits = 0; bits < (std::size_t{1} << child_pos.size()); ++bits) {
      Assignment x = 0;
      if (from_pos >= 0 && from_value == -1) x |= 1U << from_pos;
      for (std::size_t i = 0; i < child_pos.size(); ++i) {
        if (bits >> i & 1U) x |= 1U << child_pos[i];
      }
      Table t;
      t.w = {uc[x] / div};
      for (std::size_t i = 0; i < child_pos.size(); ++i) {
        t = tensor(t, child[i][bits >> i & 1U]);
      }
      add_into(acc, t);
    }
    return acc;
  }

  // Components of the forest with the chosen root of each (the root must be
  // an S variable of the component).
  std::vector<int> roots(const std::function<bool(int, int)>& earlier) const {
    std::map<int, int> comp;
    std::vector<int> out;
    for (int v : ball_vars) {
      if (comp.count(v)) continue;
      std::vector<int> members;
      std::deque<int> queue{v};
      comp[v] = v;
      while (!queue.empty()) {
        int x = queue.front();
        queue.pop_front();
        members.push_back(x);
        for (std::size_t c : var_constraints.at(x)) {
          for (int y : inst->phi.constraint(c).vars) {
            if (!comp.count(y)) {
              comp[y] = v;
              queue.push_back(y);
            }
          }
        }
      }
      int root = -1;
      for (int x : members) {
        if (in_s[x] && (root < 0 || earlier(x, root))) root = x;
      }
      if (root < 0) throw Error("ball component without an S variable");
      out.push_back(root);
    }
    return out;
  }
};

std::vector<Rational> to_subset_order(const Table& t, const std::vector<int>& s) {
  std::vector<int> pos(t.svars.size());
  for (std::size_t i = 0; i < t.svars.size(); ++i) {
    pos[i] = static_cast<int>(std::find(s.begin(), s.end(), t.svars[i]) - s.begin());
  }
  std::vector<Rational> out(std::size_t{1} << s.size(), Rational(0));
  for (std::size_t a = 0; a < t.w.size(); ++a) {
    std::size_t b = 0;
    for (std::size_t i = 0; i < pos.size(); ++i) {
      if (a >> i & 1U) b |= std::size_t{1} << pos[i];
    }
    out[b] = t.w[a];
    out[b].canonicalize();
  }
  return out;
}

}  // namespace

std::vector<Rational> build_local_distribution_ms(const SaGapInstance& inst,
                                                  const std::vector<int>& s,
                                                  const MsOptions& options) {
  if (s.empty()) return {Rational(1)};
  BallForest forest(inst, s, inst.config.d_ball, options.strict_size);
  // m(beta) = prod_C U_C(beta|C) / prod_x p_x(beta_x)^(deg x - 1), summed
  // over the ball variables outside S.
  std::function<Table(int, std::size_t, int)> var_table = [&](int v, std::size_t parent,
                                                              int value) {
    Table t = forest.base(v, value);
    const auto& cs = forest.var_constraints.at(v);
    Rational factor = 1;
    const int exponent = static_cast<int>(cs.size()) - 1;
    const Rational pv = forest.p(v, value);
    for (int e = 0; e < exponent; ++e) factor /= pv;
    if (exponent < 0) factor *= pv;
    for (auto& w : t.w) w *= factor;
    for (std::size_t c : cs) {
      if (c == parent) continue;
      t = tensor(t, forest.constraint_table(c, v, value, var_table,
                                            [](std::size_t, int, int) { return Rational(1); }));
    }
    return t;
  };
  Table total;
  total.w = {Rational(1)};
  const std::size_t none = std::numeric_limits<std::size_t>::max();
  for (int root : forest.roots([](int a, int b) { return a < b; })) {
    Table comp;
    add_into(comp, var_table(root, none, 1));
    add_into(comp, var_table(root, none, -1));
    total = tensor(total, comp);
  }
  return to_subset_order(total, s);
}

std::vector<Rational> local_distribution_ordered(const SaGapInstance& inst,
                                                 const std::vector<int>& s,
                                                 const std::vector<int>& rank) {
  if (s.empty()) return {Rational(1)};
  if (static_cast<int>(rank.size()) != inst.phi.num_vars()) {
    throw Error("ordering must rank every variable");
  }
  BallForest forest(inst, s, inst.config.d_ball, false);
  // Conditional step: U_C(beta|C) / U_C(beta_parent), with the marginal
  // taken from U_C itself.
  auto marginal = [&](std::size_t c, int pos, int value) {
    const CubeDistribution& uc = forest.u.at(c);
    Rational m = 0;
    for (Assignment x = 0; x < uc.probs().size(); ++x) {
      if (coordinate(x, pos) == value) m += uc[x];
    }
    return m;
  };
  std::function<Table(int, std::size_t, int)> var_table = [&](int v, std::size_t parent,
                                                              int value) {
    Table t = forest.base(v, value);
    std::vector<std::size_t> children;
    for (std::size_t c : forest.var_constraints.at(v)) {
      if (c != parent) children.push_back(c);
    }
    std::sort(children.begin(), children.end(), [&](std::size_t a, std::size_t b) {
      auto key = [&](std::size_t c) {
        std::vector<int> r;
        for (int x : inst.phi.constraint(c).vars) r.push_back(rank[x]);
        std::sort(r.begin(), r.end());
        return r;
      };
      return key(a) < key(b);
    });
    for (std::size_t c : children) {
      t = tensor(t, forest.constraint_table(c, v, value, var_table, marginal));
    }
    return t;
  };
  Table total;
  total.w = {Rational(1)};
  const std::size_t none = std::numeric_limits<std::size_t>::max();
  for (int root : forest.roots([&](int a, int b) { return rank[a] < rank[b]; })) {
    Table comp;
    for (int value : {1, -1}) {
      Table t = var_table(root, none, value);
      const Rational q = forest.p(root, value);
      for (auto& w : t.w) w *= q;
      add_into(comp, t);
    }
    total = tensor(total, comp);
  }
  return to_subset_order(total, s);
}

std::vector<double> local_distribution_sampled(const SaGapInstance& inst,
                                               const std::vector<int>& s, std::size_t draws,
                                               std::uint64_t seed) {
  std::vector<double> counts(std::size_t{1} << s.size(), 0.0);
  if (s.empty()) {
    counts[0] = 1;
    return counts;
  }
  BallForest forest(inst, s, inst.config.d_ball, false);
  const auto roots = forest.roots([](int a, int b) { return a < b; });
  Rng rng = make_rng(seed, 0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::map<int, int> value;
  for (std::size_t n = 0; n < draws; ++n) {
    value.clear();
    for (int root : roots) {
      value[root] = unit(rng) < to_double(forest.p(root, 1)) ? 1 : -1;
      std::deque<std::pair<int, std::size_t>> queue{{root, std::numeric_limits<std::size_t>::max()}};
      while (!queue.empty()) {
        auto [v, parent] = queue.front();
        queue.pop_front();
        for (std::size_t c : forest.var_constraints.at(v)) {
          if (c == parent) continue;
          const Constraint& con = inst.phi.constraint(c);
          const CubeDistribution& uc = forest.u.at(c);
          int pos = 0;
          while (con.vars[pos] != v) ++pos;
          std::vector<double> w(uc.probs().size(), 0.0);
          for (Assignment x = 0; x < w.size(); ++x) {
            if (coordinate(x, pos) == value[v]) w[x] = to_double(uc[x]);
          }
          std::discrete_distribution<Assignment> pick(w.begin(), w.end());
          const Assignment x = pick(rng);
          for (std::size_t j = 0; j < con.vars.size(); ++j) {
            if (static_cast<int>(j) == pos) continue;
            value[con.vars[j]] = coordinate(x, static_cast<int>(j));
            queue.emplace_back(con.vars[j], c);
          }
        }
      }
    }
    std::size_t idx = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (value[s[i]] == -1) idx |= std::size_t{1} << i;
    }
    counts[idx] += 1;
  }
  for (auto& c : counts) c /= static_cast<double>(draws);
  return counts;
}

SaAssembly assemble_sa_solution(const SaGapInstance& inst,
                                const std::vector<std::vector<int>>& extra,
                                const MsOptions& options) {
  SaAssembly out;
  out.family.r = std::max(inst.config.r, inst.phi.predicate().arity());
  for (const auto& s : downward_closure(inst.phi, extra)) {
    out.family.set(s, build_local_distribution_ms(inst, s, options));
  }
  out.consistency = verify_consistency(out.family);
  return out;
}

Rational expected_sat_symbolic(const SaGapConfig& cfg, const std::vector<int>& assignment) {
  cfg.validate();
  const Predicate& f = cfg.f;
  const int k = f.arity();
  const int s = cfg.layers() - 1;
  if (static_cast<int>(assignment.size()) != (s + 1) * cfg.n) {
    throw Error("assignment must cover every layer variable");
  }
  std::vector<Rational> average(s + 1, Rational(0));
  for (std::size_t v = 0; v < assignment.size(); ++v) {
    if (assignment[v] != 1 && assignment[v] != -1) throw Error("assignment values must be +-1");
    average[v / cfg.n] += assignment[v];
  }
  for (auto& a : average) {
    a /= cfg.n;
    a.canonicalize();
  }
  Rational total = 0;
  for (const auto& atom : cfg.lambda->atoms()) {
    std::vector<Rational> tilde(k);
    for (int j = 0; j < k; ++j) {
      const Rational z = (1 - cfg.delta) * atom.nu.bias(j);
      tilde[j] = sgn(z) * average[layer_of(abs(z), s)];
    }
    Rational value = f.rho();
    for (SubsetMask sub : f.spectrum().support()) {
      Rational prod = f.spectrum()[sub];
      for (int j = 0; j < k; ++j) {
        if (sub >> j & 1U) prod *= tilde[j];
      }
      value += prod;
    }
    total += atom.weight * value;
  }
  total.canonicalize();
  return total;
}

std::string serialize_provenance(const SaGapInstance& inst) {
  auto probs = [](const CubeDistribution& d) {
    nlohmann::json j = nlohmann::json::object();
    for (Assignment x = 0; x < d.probs().size(); ++x) {
      if (sgn(d[x]) != 0) j[assignment_to_string(x, d.arity())] = to_string(d[x]);
    }
    return j;
  };
  nlohmann::json j;
  j["layers"] = inst.s + 1;
  j["n_per_layer"] = inst.config.n;
  std::vector<std::string> reps;
  for (const auto& t : inst.representatives) reps.push_back(to_string(t));
  j["representatives"] = reps;
  j["constraints"] = nlohmann::json::array();
  for (std::size_t c = 0; c < inst.provenance.size(); ++c) {
    const auto& p = inst.provenance[c];
    nlohmann::json e;
    e["index"] = c;
    e["atom"] = p.atom;
    std::vector<std::string> zeta;
    for (const auto& z : p.zeta) zeta.push_back(to_string(z));
    e["zeta"] = zeta;
    e["layers"] = p.layers;
    e["nu_bar"] = probs(p.nu_bar);
    e["nu_corrected"] = probs(p.nu_corrected);
    e["correction_l1"] = to_string(p.correction_l1);
    j["constraints"].push_back(e);
  }
  return j.dump(2);
}

}  // namespace reslab
