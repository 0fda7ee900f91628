#include "reslab/csp.hpp"

#include <cmath>
#include <thread>

#include "json.hpp"

namespace reslab {

CspInstance::CspInstance(Predicate f, int n, std::vector<Constraint> constraints)
    : f_(std::move(f)), n_(n), constraints_(std::move(constraints)) {
  if (n < 0) throw Error("variable count must be nonnegative");
  const std::size_t k = f_.arity();
  for (const auto& c : constraints_) {
    if (c.vars.size() != k || c.signs.size() != k) {
      throw Error("constraint arity does not match the predicate");
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (c.vars[j] < 0 || c.vars[j] >= n) throw Error("constraint variable out of range");
      if (c.signs[j] != 1 && c.signs[j] != -1) throw Error("constraint signs must be +1 or -1");
    }
  }
}

Assignment CspInstance::literal_index(std::size_t c, FullAssignment x) const {
  const Constraint& con = constraints_[c];
  Assignment idx = 0;
  for (std::size_t j = 0; j < con.vars.size(); ++j) {
    unsigned bit = static_cast<unsigned>((x >> con.vars[j]) & 1u) ^ (con.signs[j] < 0 ? 1u : 0u);
    idx |= bit << j;
  }
  return idx;
}

std::size_t CspInstance::count_satisfied(FullAssignment x) const {
  std::size_t n = 0;
  for (std::size_t c = 0; c < constraints_.size(); ++c) n += satisfied(c, x);
  return n;
}

FullAssignment pack_assignment(const std::vector<int>& values) {
  if (values.size() > 64) throw Error("assignment longer than 64 variables");
  FullAssignment x = 0;
  for (std::size_t v = 0; v < values.size(); ++v) {
    if (values[v] == -1) {
      x |= FullAssignment{1} << v;
    } else if (values[v] != 1) {
      throw Error("assignment values must be +1 or -1");
    }
  }
  return x;
}

std::vector<int> unpack_assignment(FullAssignment x, int n) {
  std::vector<int> out(n);
  for (int v = 0; v < n; ++v) out[v] = ((x >> v) & 1u) ? -1 : 1;
  return out;
}

double BruteForceResult::mean() const {
  double total = 0, count = 0;
  const double m = static_cast<double>(histogram.size() - 1);
  for (std::size_t j = 0; j < histogram.size(); ++j) {
    total += static_cast<double>(histogram[j]) * static_cast<double>(j);
    count += static_cast<double>(histogram[j]);
  }
  return m > 0 ? total / (count * m) : 1.0;
}

namespace {

struct Occurrence {
  int constraint;
  Assignment bit;
};

// Gray-code sweep over the low `free_bits` variables with the high ones
// fixed to `prefix`.
void sweep(const CspInstance& phi, const std::vector<std::vector<Occurrence>>& occ, int free_bits,
           FullAssignment prefix, std::vector<std::uint64_t>& hist, std::size_t& best,
           FullAssignment& best_x) {
  const Predicate& f = phi.predicate();
  std::vector<Assignment> local(phi.size());
  std::size_t sat = 0;
  FullAssignment x = prefix;
  for (std::size_t c = 0; c < phi.size(); ++c) {
    local[c] = phi.literal_index(c, x);
    sat += f(local[c]);
  }
  const std::uint64_t total = std::uint64_t{1} << free_bits;
  for (std::uint64_t step = 0;; ++step) {
    ++hist[sat];
    if (sat > best || (sat == best && x < best_x)) {
      best = sat;
      best_x = x;
    }
    if (step + 1 == total) break;
    int v = __builtin_ctzll(step + 1);
    x ^= FullAssignment{1} << v;
    for (const auto& o : occ[v]) {
      Assignment& l = local[o.constraint];
      sat -= f(l);
      l ^= o.bit;
      sat += f(l);
    }
  }
}

}  // namespace

BruteForceResult brute_force_opt(const CspInstance& phi, int jobs) {
  const int n = phi.num_vars();
  if (n > kMaxBruteForceVars) {
    throw Error("brute force needs n <= " + std::to_string(kMaxBruteForceVars) + ", got " +
                std::to_string(n));
  }
  std::vector<std::vector<Occurrence>> occ(n);
  for (std::size_t c = 0; c < phi.size(); ++c) {
    const auto& con = phi.constraint(c);
    for (std::size_t j = 0; j < con.vars.size(); ++j) {
      occ[con.vars[j]].push_back({static_cast<int>(c), Assignment{1} << j});
    }
  }
  int split_bits = 0;
  while ((1 << (split_bits + 1)) <= std::max(1, jobs) && split_bits + 1 <= n) ++split_bits;
  const int parts = 1 << split_bits;
  const int free_bits = n - split_bits;
  const std::size_t m = phi.size();
  std::vector<std::vector<std::uint64_t>> hists(parts, std::vector<std::uint64_t>(m + 1, 0));
  std::vector<std::size_t> best(parts, 0);
  std::vector<FullAssignment> best_x(parts, ~FullAssignment{0});
  auto work = [&](int part) {
    FullAssignment prefix = static_cast<FullAssignment>(part) << free_bits;
    sweep(phi, occ, free_bits, prefix, hists[part], best[part], best_x[part]);
  };
  if (parts == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (int p = 0; p < parts; ++p) threads.emplace_back(work, p);
    for (auto& t : threads) t.join();
  }
  BruteForceResult res;
  res.histogram.assign(m + 1, 0);
  std::size_t top = 0;
  FullAssignment top_x = ~FullAssignment{0};
  for (int p = 0; p < parts; ++p) {
    for (std::size_t j = 0; j <= m; ++j) res.histogram[j] += hists[p][j];
    if (best[p] > top || (best[p] == top && best_x[p] < top_x)) {
      top = best[p];
      top_x = best_x[p];
    }
  }
  std::size_t low = 0;
  while (low <= m && res.histogram[low] == 0) ++low;
  const unsigned long denom = m == 0 ? 1 : static_cast<unsigned long>(m);
  res.opt = m == 0 ? Rational(1) : Rational(static_cast<unsigned long>(top), denom);
  res.min = m == 0 ? Rational(1) : Rational(static_cast<unsigned long>(low), denom);
  res.opt.canonicalize();
  res.min.canonicalize();
  res.argmax = top_x;
  return res;
}

Rational estimate_sat(const CspInstance& phi, const std::vector<int>& assignment) {
  if (static_cast<int>(assignment.size()) != phi.num_vars()) {
    throw Error("assignment length does not match the instance");
  }
  if (phi.size() == 0) return 1;
  std::size_t sat = 0;
  const Predicate& f = phi.predicate();
  for (const auto& con : phi.constraints()) {
    Assignment idx = 0;
    for (std::size_t j = 0; j < con.vars.size(); ++j) {
      int v = assignment[con.vars[j]];
      if (v != 1 && v != -1) throw Error("assignment values must be +1 or -1");
      if (v * con.signs[j] < 0) idx |= Assignment{1} << j;
    }
    sat += f(idx);
  }
  Rational r(static_cast<unsigned long>(sat), static_cast<unsigned long>(phi.size()));
  r.canonicalize();
  return r;
}

SatEstimate estimate_sat(const CspInstance& phi,
                         const std::function<std::vector<int>(Rng&)>& sampler, std::size_t draws,
                         std::uint64_t seed) {
  Rng rng = make_rng(seed, 0);
  double sum = 0, sum_sq = 0;
  for (std::size_t i = 0; i < draws; ++i) {
    double v = to_double(estimate_sat(phi, sampler(rng)));
    sum += v;
    sum_sq += v * v;
  }
  SatEstimate e;
  e.draws = draws;
  if (draws == 0) return e;
  e.mean = sum / draws;
  double var = draws > 1 ? (sum_sq - draws * e.mean * e.mean) / (draws - 1) : 0;
  e.std_error = std::sqrt(std::max(0.0, var) / draws);
  return e;
}

CspInstance compact_instance(const CspInstance& phi, std::vector<int>* mapping) {
  std::vector<int> index(phi.num_vars(), -1);
  std::vector<int> order;
  for (const auto& c : phi.constraints()) {
    for (int v : c.vars) index[v] = 0;
  }
  for (int v = 0; v < phi.num_vars(); ++v) {
    if (index[v] == 0) {
      index[v] = static_cast<int>(order.size());
      order.push_back(v);
    }
  }
  std::vector<Constraint> constraints = phi.constraints();
  for (auto& c : constraints) {
    for (int& v : c.vars) v = index[v];
  }
  if (mapping) *mapping = order;
  return CspInstance(phi.predicate(), static_cast<int>(order.size()), std::move(constraints));
}

std::string serialize_instance(const CspInstance& phi) {
  nlohmann::json j;
  j["predicate"] = nlohmann::json::parse(serialize_predicate(phi.predicate()));
  j["n"] = phi.num_vars();
  j["constraints"] = nlohmann::json::array();
  for (const auto& c : phi.constraints()) {
    j["constraints"].push_back({{"vars", c.vars}, {"signs", c.signs}});
  }
  return j.dump();
}

CspInstance parse_instance(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("instance file is not valid JSON: ") + e.what());
  }
  if (!j.contains("predicate") || !j.contains("n") || !j.contains("constraints")) {
    throw Error("instance file needs fields predicate, n, constraints");
  }
  Predicate f = parse_predicate(j["predicate"].dump());
  std::vector<Constraint> cons;
  try {
    for (const auto& c : j["constraints"]) {
      cons.push_back({c.at("vars").get<std::vector<int>>(), c.at("signs").get<std::vector<int>>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed constraint: ") + e.what());
  }
  return CspInstance(std::move(f), j["n"].get<int>(), std::move(cons));
}

}  // namespace reslab
