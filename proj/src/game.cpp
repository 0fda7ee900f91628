#include "reslab/game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "reslab/parallel.hpp"

namespace reslab {

PayoffSampler::PayoffSampler(const Predicate& f, int d, std::size_t samples, std::uint64_t seed)
    : f_(&f), d_(d), samples_(samples) {
  if (d < 1) throw Error("payoff sampler needs d >= 1");
  if (samples == 0) throw Error("payoff sampler needs at least one sample");
  const int k = f.arity();
  const double total = static_cast<double>(samples) * k * d;
  if (total > static_cast<double>(size_budget())) {
    throw Error("payoff sampler would hold " + std::to_string(static_cast<long long>(total)) +
                " normals; raise RESLAB_SIZE_BUDGET or lower the sample count");
  }
  Rng rng = make_rng(seed, 0);
  std::normal_distribution<double> normal;
  base_.resize(samples * k * d);
  for (auto& z : base_) z = normal(rng);
  for (SubsetMask s : f.spectrum().support()) {
    support_.push_back(s);
    coeff_.push_back(to_double(f.spectrum()[s]));
  }
}

SampledCells PayoffSampler::sample(const MomentMatrix& zeta, int q) const {
  const int k = f_->arity();
  if (zeta.arity() != k) throw Error("moment matrix arity does not match the predicate");
  auto spec = GaussianProcessSpec::from_moments(zeta, d_);
  PartitionedFunction layout(q, d_);
  SampledCells out;
  out.k = k;
  out.q = q;
  out.samples = samples_;
  out.codes.assign(samples_ * k, 0);
  std::vector<double> point(d_);
  const Eigen::MatrixXd& factor = spec.factor;
  for (std::size_t n = 0; n < samples_; ++n) {
    const double* z = &base_[n * k * d_];
    for (int i = 0; i < k; ++i) {
      for (int l = 0; l < d_; ++l) {
        double y = spec.mu(i);
        for (int j = 0; j <= i; ++j) y += factor(i, j) * z[l * k + j];
        point[l] = y;
      }
      auto id = cell_index(point.data(), d_, q);
      std::int32_t code = 0;
      if (id) {
        if (is_canonical_cell(*id, d_, q)) {
          code = static_cast<std::int32_t>(layout.canonical_slot(*id) + 1);
        } else {
          code = -static_cast<std::int32_t>(layout.canonical_slot(mirror_cell(*id, d_, q)) + 1);
        }
      }
      out.codes[n * k + i] = code;
    }
  }
  return out;
}

namespace {

double term_value(const std::int32_t* codes, const PartitionedFunction& psi,
                  const std::vector<SubsetMask>& support, const std::vector<double>& coeff,
                  int k, bool guard) {
  int vals[kMaxArity];
  for (int i = 0; i < k; ++i) {
    const std::int32_t c = codes[i];
    if (c == 0) {
      vals[i] = 0;
    } else if (c > 0) {
      vals[i] = psi.slot_value(static_cast<std::size_t>(c - 1));
    } else {
      vals[i] = -psi.slot_value(static_cast<std::size_t>(-c - 1));
    }
  }
  double total = 0;
  for (std::size_t t = 0; t < support.size(); ++t) {
    const SubsetMask s = support[t];
    int prod = 1;
    for (int i = 0; i < k && prod != 0; ++i) {
      if (s >> i & 1U) prod *= vals[i];
    }
    if (prod == 0) continue;
    if (guard) {
      bool distinct = true;
      for (int i = 0; i < k && distinct; ++i) {
        if (!(s >> i & 1U)) continue;
        for (int j = i + 1; j < k; ++j) {
          if ((s >> j & 1U) && std::abs(codes[i]) == std::abs(codes[j])) {
            distinct = false;
            break;
          }
        }
      }
      if (!distinct) continue;
    }
    total += coeff[t] * prod;
  }
  return total;
}

}  // namespace

std::vector<double> PayoffSampler::values(const SampledCells& cells,
                                          const PartitionedFunction& psi, bool guard) const {
  if (cells.q != psi.q() || psi.d() != d_) throw Error("psi does not match the sampled partition");
  const int k = cells.k;
  std::vector<double> out(cells.samples, 0.0);
  if (psi.is_zero()) return out;
  for (std::size_t n = 0; n < cells.samples; ++n) {
    out[n] = term_value(&cells.codes[n * k], psi, support_, coeff_, k, guard);
  }
  return out;
}

double PayoffSampler::sample_value(const SampledCells& cells, std::size_t n,
                                   const PartitionedFunction& psi, bool guard) const {
  return term_value(&cells.codes[n * cells.k], psi, support_, coeff_, cells.k, guard);
}

PayoffEstimate PayoffSampler::estimate(const SampledCells& cells, const PartitionedFunction& psi,
                                       bool guard) const {
  return summarize(values(cells, psi, guard));
}

PayoffEstimate summarize(const std::vector<double>& values) {
  PayoffEstimate e;
  e.samples = values.size();
  if (values.empty()) return e;
  double sum = 0;
  for (double v : values) sum += v;
  e.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0;
    for (double v : values) ss += (v - e.mean) * (v - e.mean);
    const double var = ss / static_cast<double>(values.size() - 1);
    e.std_error = std::sqrt(var / static_cast<double>(values.size()));
  }
  return e;
}

void check_dev_point(const MomentMatrix& zeta, const Rational& delta) {
  auto cov = covariance_of(zeta);
  const double need = to_double(delta) - 1e-9;
  if (cov.min_eigenvalue < need) {
    std::ostringstream msg;
    msg << "dev point has covariance eigenvalue " << cov.min_eigenvalue << " below delta "
        << to_string(delta);
    throw Error(msg.str());
  }
}

PayoffEstimate payoff_estimate(const MomentMatrix& zeta, const PartitionedFunction& psi,
                               const GameConfig& cfg, bool multilinear_guard) {
  if (psi.d() != cfg.dimension()) throw Error("psi dimension does not match the game");
  PayoffSampler sampler(cfg.f, cfg.dimension(), cfg.samples, cfg.seed);
  return sampler.estimate(sampler.sample(zeta, psi.q()), psi, multilinear_guard);
}

double PayoffMatrix::max_std_error() const {
  double m = 0;
  for (double s : std_errors) m = std::max(m, s);
  return m;
}

namespace {

PayoffMatrix matrix_from_sampler(const PayoffSampler& sampler,
                                 const std::vector<SampledCells>& rows,
                                 const std::vector<PartitionedFunction>& psis, bool guard,
                                 int jobs) {
  PayoffMatrix pm;
  pm.game.rows = static_cast<int>(rows.size());
  pm.game.cols = static_cast<int>(psis.size());
  pm.game.payoffs.assign(rows.size() * psis.size(), 0.0);
  pm.std_errors.assign(rows.size() * psis.size(), 0.0);
  const std::size_t cols = psis.size();
  parallel_for(rows.size() * cols, jobs, [&](std::size_t idx) {
    auto e = sampler.estimate(rows[idx / cols], psis[idx % cols], guard);
    pm.game.payoffs[idx] = e.mean;
    pm.std_errors[idx] = e.std_error;
  });
  return pm;
}

std::vector<SampledCells> sample_rows(const PayoffSampler& sampler,
                                      const std::vector<MomentMatrix>& dev, int q, int jobs) {
  std::vector<SampledCells> rows(dev.size());
  parallel_for(dev.size(), jobs, [&](std::size_t i) { rows[i] = sampler.sample(dev[i], q); });
  return rows;
}

}  // namespace

PayoffMatrix payoff_matrix(const GameConfig& cfg, const std::vector<PartitionedFunction>& psis,
                           bool multilinear_guard) {
  for (const auto& zeta : cfg.dev_points) check_dev_point(zeta, cfg.delta);
  for (const auto& psi : psis) {
    if (psi.q() != cfg.q || psi.d() != cfg.dimension()) {
      throw Error("psi does not live on the configured partition P_q");
    }
  }
  PayoffSampler sampler(cfg.f, cfg.dimension(), cfg.samples, cfg.seed);
  auto rows = sample_rows(sampler, cfg.dev_points, cfg.q, cfg.jobs);
  return matrix_from_sampler(sampler, rows, psis, multilinear_guard, cfg.jobs);
}

namespace {

void compositions(int total, int parts, std::vector<int>& cur,
                  std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == parts - 1) {
    cur.push_back(total);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int v = total; v >= 0; --v) {
    cur.push_back(v);
    compositions(total - v, parts, cur, out);
    cur.pop_back();
  }
}

}  // namespace

std::vector<MomentMatrix> default_dev_points(const Predicate& f, int p, const Rational& delta) {
  if (p < 1) throw Error("R_p needs p >= 1");
  const auto sat = f.satisfying();
  if (sat.empty()) throw Error("predicate has no satisfying assignment");
  const int k = f.arity();
  const int s = static_cast<int>(sat.size());
  double estimate = 1;
  for (int i = 1; i < s; ++i) {
    estimate = estimate * (std::pow(2.0, p - 1) + i) / i;
  }
  if (estimate > 1e6) throw Error("R_p too large for p = " + std::to_string(p));
  std::vector<MomentMatrix> out;
  std::set<MomentMatrix> seen;
  for (int level = 1; level <= p; ++level) {
    const int denom = 1 << (level - 1);
    std::vector<std::vector<int>> comps;
    std::vector<int> cur;
    compositions(denom, s, cur, comps);
    for (const auto& c : comps) {
      std::vector<Rational> probs(std::size_t{1} << k, Rational(0));
      for (int i = 0; i < s; ++i) probs[sat[i]] = Rational(c[i], denom);
      for (auto& v : probs) v.canonicalize();
      auto zeta = noise_shift(moments_of(CubeDistribution(k, probs)), delta);
      if (seen.insert(zeta).second) out.push_back(zeta);
    }
  }
  return out;
}

std::uint64_t psi_count(int q, int d) {
  const std::uint64_t slots = num_cells(d, q) / 2;
  std::uint64_t count = 1;
  for (std::uint64_t i = 0; i < slots; ++i) {
    if (count > std::numeric_limits<std::uint64_t>::max() / 3) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    count *= 3;
  }
  return count;
}

std::vector<PartitionedFunction> enumerate_psi(int q, int d, std::uint64_t budget) {
  const std::uint64_t count = psi_count(q, d);
  if (count > budget) {
    throw Error("enumerating psi on P_" + std::to_string(q) + " in dimension " +
                std::to_string(d) + " requires " +
                (count == std::numeric_limits<std::uint64_t>::max() ? std::string("> 2^64")
                                                                    : std::to_string(count)) +
                " strategies, budget is " + std::to_string(budget));
  }
  std::vector<PartitionedFunction> out;
  out.reserve(count);
  PartitionedFunction cur(q, d);
  const std::size_t slots = cur.num_canonical();
  std::vector<int> digits(slots, 0);
  for (std::uint64_t n = 0; n < count; ++n) {
    static constexpr int kDigitValue[3] = {0, 1, -1};
    for (std::size_t s = 0; s < slots; ++s) cur.set_slot(s, kDigitValue[digits[s]]);
    out.push_back(cur);
    for (std::size_t s = 0; s < slots; ++s) {
      if (++digits[s] < 3) break;
      digits[s] = 0;
    }
  }
  return out;
}

GameValueReport solve_payoff_game(PayoffMatrix matrix, std::vector<PartitionedFunction> psis,
                                  bool exact) {
  if (matrix.game.rows == 0 || matrix.game.cols == 0) throw Error("empty payoff matrix");
  GameValueReport report;
  auto sol = game_value<double>(matrix.game);
  report.value = sol.value;
  report.sigma = matrix.max_std_error();
  report.ci_low = report.value - 3 * report.sigma;
  report.ci_high = report.value + 3 * report.sigma;
  report.exact = exact;
  report.row_strategy = std::move(sol.row_strategy);
  report.col_strategy = std::move(sol.col_strategy);
  report.strategies = std::move(psis);
  report.matrix = std::move(matrix);
  return report;
}

GameValueReport game_value_pq(const GameConfig& cfg, std::uint64_t psi_enumeration_budget,
                              bool multilinear_guard) {
  if (cfg.dev_points.empty()) throw Error("game needs at least one dev point");
  auto psis = enumerate_psi(cfg.q, cfg.dimension(), psi_enumeration_budget);
  auto matrix = payoff_matrix(cfg, psis, multilinear_guard);
  return solve_payoff_game(std::move(matrix), std::move(psis), true);
}

PartitionedFunction best_response(const PayoffSampler& sampler,
                                  const std::vector<SampledCells>& rows,
                                  const std::vector<double>& row_weights,
                                  PartitionedFunction start, bool guard) {
  if (rows.size() != row_weights.size()) throw Error("row weights do not match the rows");
  PartitionedFunction psi = std::move(start);
  const std::size_t slots = psi.num_canonical();
  // touched[r][slot] lists the samples of row r with a point in that slot;
  // only those change when the slot is reassigned.
  std::vector<std::vector<std::vector<std::uint32_t>>> touched(rows.size());
  std::vector<std::vector<double>> current(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& cells = rows[r];
    if (cells.q != psi.q()) throw Error("sampled rows do not match the psi partition");
    touched[r].assign(slots, {});
    for (std::size_t n = 0; n < cells.samples; ++n) {
      for (int i = 0; i < cells.k; ++i) {
        const std::int32_t c = cells.codes[n * cells.k + i];
        if (c == 0) continue;
        auto& list = touched[r][static_cast<std::size_t>(std::abs(c) - 1)];
        if (list.empty() || list.back() != n) list.push_back(static_cast<std::uint32_t>(n));
      }
    }
    current[r] = sampler.values(cells, psi, guard);
  }
  PartitionedFunction probe = psi;
  for (int sweep = 0; sweep < 8; ++sweep) {
    bool improved = false;
    for (std::size_t s = 0; s < slots; ++s) {
      const int old_value = psi.slot_value(s);
      double best_gain = 1e-12;
      int best_value = old_value;
      for (int v = -1; v <= 1; ++v) {
        if (v == old_value) continue;
        probe.set_slot(s, v);
        double gain = 0;
        for (std::size_t r = 0; r < rows.size(); ++r) {
          if (row_weights[r] == 0) continue;
          double delta = 0;
          for (std::uint32_t n : touched[r][s]) {
            delta += sampler.sample_value(rows[r], n, probe, guard) - current[r][n];
          }
          gain += row_weights[r] * delta / static_cast<double>(rows[r].samples);
        }
        if (gain > best_gain) {
          best_gain = gain;
          best_value = v;
        }
      }
      probe.set_slot(s, best_value);
      if (best_value == old_value) continue;
      psi.set_slot(s, best_value);
      improved = true;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::uint32_t n : touched[r][s]) {
          current[r][n] = sampler.sample_value(rows[r], n, psi, guard);
        }
      }
    }
    if (!improved) break;
  }
  return psi;
}

namespace {

std::string psi_key(const PartitionedFunction& psi) {
  std::string key(psi.num_canonical(), '0');
  for (std::size_t s = 0; s < psi.num_canonical(); ++s) {
    key[s] = static_cast<char>('1' + psi.slot_value(s));
  }
  return key;
}

// Strategy population for one partition level, with its payoff columns on
// every dev point.
struct Population {
  std::vector<PartitionedFunction> psis;
  std::set<std::string> keys;
  std::vector<std::vector<double>> pay;  // per strategy, per dev point
  std::vector<std::vector<double>> err;

  PayoffMatrix leading_rows(int rows) const {
    PayoffMatrix out;
    out.game.rows = rows;
    out.game.cols = static_cast<int>(psis.size());
    out.game.payoffs.resize(static_cast<std::size_t>(rows) * psis.size());
    out.std_errors.resize(out.game.payoffs.size());
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < out.game.cols; ++j) {
        out.game.at(i, j) = pay[j][i];
        out.std_errors[static_cast<std::size_t>(i) * out.game.cols + j] = err[j][i];
      }
    }
    return out;
  }
};

void add_strategy(Population& pop, const PayoffSampler& sampler,
                  const std::vector<SampledCells>& rows, PartitionedFunction psi, bool guard) {
  if (!pop.keys.insert(psi_key(psi)).second) return;
  std::vector<double> pay(rows.size());
  std::vector<double> err(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto e = sampler.estimate(rows[i], psi, guard);
    pay[i] = e.mean;
    err[i] = e.std_error;
  }
  pop.pay.push_back(std::move(pay));
  pop.err.push_back(std::move(err));
  pop.psis.push_back(std::move(psi));
}

SampledCells truncate(const SampledCells& cells, std::size_t samples) {
  if (samples == 0 || samples >= cells.samples) return cells;
  SampledCells out{cells.k, cells.q, samples, {}};
  out.codes.assign(cells.codes.begin(), cells.codes.begin() + samples * cells.k);
  return out;
}

}  // namespace

ScanReport scan_limits(const Predicate& f, const std::vector<int>& ps, const std::vector<int>& qs,
                       const ScanOptions& options) {
  if (ps.empty() || qs.empty()) throw Error("scan needs a nonempty p grid and q grid");
  if (!std::is_sorted(ps.begin(), ps.end()) || !std::is_sorted(qs.begin(), qs.end()) ||
      std::adjacent_find(ps.begin(), ps.end()) != ps.end() ||
      std::adjacent_find(qs.begin(), qs.end()) != qs.end()) {
    throw Error("scan grids must be strictly increasing");
  }
  if (qs.front() < 0) throw Error("partition level must be nonnegative");
  const int d = options.d > 0 ? options.d : f.arity() + 1;

  std::vector<std::vector<MomentMatrix>> families = options.dev_families;
  if (families.empty()) {
    for (int p : ps) families.push_back(default_dev_points(f, p, options.delta));
  }
  if (families.size() != ps.size()) throw Error("one dev-point family is needed per p");
  for (std::size_t i = 0; i < families.size(); ++i) {
    if (families[i].empty()) throw Error("empty dev-point family");
    if (i == 0) continue;
    const auto& prev = families[i - 1];
    const auto& cur = families[i];
    if (cur.size() < prev.size() || !std::equal(prev.begin(), prev.end(), cur.begin())) {
      throw Error("non-nested family: R_" + std::to_string(ps[i - 1]) + " is not a prefix of R_" +
                  std::to_string(ps[i]));
    }
  }
  const auto& all_dev = families.back();
  for (const auto& zeta : all_dev) check_dev_point(zeta, options.delta);

  PayoffSampler sampler(f, d, options.samples, options.seed);
  ScanReport report;
  report.guard = options.guard;
  std::vector<PartitionedFunction> previous;
  int previous_q = -1;
  std::vector<std::vector<ScanCell>> table(ps.size());

  for (int q : qs) {
    auto rows = sample_rows(sampler, all_dev, q, 1);
    Population pop;
    const bool exact = psi_count(q, d) <= options.psi_budget;
    if (exact) {
      for (auto& psi : enumerate_psi(q, d, options.psi_budget)) {
        add_strategy(pop, sampler, rows, std::move(psi), options.guard);
      }
    } else {
      add_strategy(pop, sampler, rows, PartitionedFunction(q, d), options.guard);
      for (auto psi : previous) {
        for (int level = previous_q; level < q; ++level) psi = psi.refine();
        add_strategy(pop, sampler, rows, std::move(psi), options.guard);
      }
      Rng rng = make_rng(options.seed, 1000 + static_cast<std::uint64_t>(q));
      std::uniform_int_distribution<int> pick(-1, 1);
      for (std::size_t n = 0; n < options.heuristic.random_strategies; ++n) {
        PartitionedFunction psi(q, d);
        for (std::size_t s = 0; s < psi.num_canonical(); ++s) psi.set_slot(s, pick(rng));
        add_strategy(pop, sampler, rows, std::move(psi), options.guard);
      }
      std::vector<SampledCells> short_rows;
      for (const auto& r : rows) {
        short_rows.push_back(truncate(r, options.heuristic.best_response_samples));
      }
      for (std::size_t pi = 0; pi < ps.size(); ++pi) {
        const int nrows = static_cast<int>(families[pi].size());
        for (int round = 0; round < options.heuristic.best_response_rounds; ++round) {
          auto sol = game_value<double>(pop.leading_rows(nrows).game);
          std::vector<double> weights(rows.size(), 0.0);
          for (int i = 0; i < nrows; ++i) weights[i] = std::max(0.0, sol.row_strategy[i]);
          int best_col = 0;
          double best = -std::numeric_limits<double>::infinity();
          for (std::size_t j = 0; j < pop.psis.size(); ++j) {
            double v = 0;
            for (int i = 0; i < nrows; ++i) v += weights[i] * pop.pay[j][i];
            if (v > best) {
              best = v;
              best_col = static_cast<int>(j);
            }
          }
          std::vector<SampledCells> br_rows(short_rows.begin(), short_rows.begin() + nrows);
          std::vector<double> br_weights(weights.begin(), weights.begin() + nrows);
          auto response =
              best_response(sampler, br_rows, br_weights, pop.psis[best_col], options.guard);
          const std::size_t before = pop.psis.size();
          add_strategy(pop, sampler, rows, std::move(response), options.guard);
          if (pop.psis.size() == before) break;
        }
      }
    }
    for (std::size_t pi = 0; pi < ps.size(); ++pi) {
      const int nrows = static_cast<int>(families[pi].size());
      auto solved = solve_payoff_game(pop.leading_rows(nrows), {}, exact);
      ScanCell cell;
      cell.p = ps[pi];
      cell.q = q;
      cell.value = solved.value;
      cell.ci_low = solved.ci_low;
      cell.ci_high = solved.ci_high;
      cell.exact = exact;
      cell.dev_points = static_cast<std::size_t>(nrows);
      cell.strategies = pop.psis.size();
      table[pi].push_back(cell);
      report.grid.push_back(cell);
    }
    previous = std::move(pop.psis);
    previous_q = q;
  }

  auto describe = [](const ScanCell& c) {
    std::ostringstream out;
    out << "V(p=" << c.p << ",q=" << c.q << ")=" << c.value;
    return out.str();
  };
  for (std::size_t pi = 0; pi < ps.size(); ++pi) {
    for (std::size_t qi = 0; qi < qs.size(); ++qi) {
      const ScanCell& c = table[pi][qi];
      const double half = (c.ci_high - c.ci_low) / 2;
      if (pi > 0) {
        const ScanCell& a = table[pi - 1][qi];
        if (c.value > a.value + half + (a.ci_high - a.ci_low) / 2) {
          report.violations.push_back(describe(c) + " exceeds " + describe(a) +
                                      " beyond CI (value must not increase in p)");
        }
      }
      if (qi > 0) {
        const ScanCell& a = table[pi][qi - 1];
        if (c.value < a.value - half - (a.ci_high - a.ci_low) / 2) {
          report.violations.push_back(describe(c) + " falls below " + describe(a) +
                                      " beyond CI (value must not decrease in q)");
        }
      }
    }
  }
  return report;
}

std::string scan_report_tsv(const ScanReport& report) {
  std::ostringstream out;
  out << "p\tq\tvalue\tci_low\tci_high\tregime\tdev_points\tstrategies\n";
  for (const auto& c : report.grid) {
    out << c.p << '\t' << c.q << '\t' << c.value << '\t' << c.ci_low << '\t' << c.ci_high << '\t'
        << (c.exact ? "exact" : "heuristic") << '\t' << c.dev_points << '\t' << c.strategies
        << '\n';
  }
  return out.str();
}

}  // namespace reslab
