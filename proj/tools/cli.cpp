#include "cli.hpp"

#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "reslab/basic_relaxation.hpp"
#include "reslab/csp.hpp"
#include "reslab/game.hpp"
#include "reslab/moment.hpp"
#include "reslab/rounding.hpp"
#include "reslab/sa_gap.hpp"
#include "reslab/sdp_gap.hpp"
#include "reslab/sherali_adams.hpp"
#include "reslab/vanishing.hpp"
#include "run_context.hpp"

namespace reslab::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Globals {
  std::uint64_t seed = 1;
  int jobs = 1;
  double tol = 1e-9;
  std::string out_dir = "out";
};

// Two-column field/value table plus the same data as JSON.
class Table {
 public:
  void add(const std::string& field, const std::string& value) {
    rows_.emplace_back(field, value);
  }
  void add(const std::string& field, const Rational& value) { add(field, to_string(value)); }
  void add(const std::string& field, double value) {
    std::ostringstream out;
    out << value;
    add(field, out.str());
  }
  void add(const std::string& field, std::size_t value) { add(field, std::to_string(value)); }
  void add(const std::string& field, int value) { add(field, std::to_string(value)); }
  void add(const std::string& field, bool value) { add(field, std::string(value ? "yes" : "no")); }

  std::string tsv() const {
    std::string out = "field\tvalue\n";
    for (const auto& [f, v] : rows_) out += f + "\t" + v + "\n";
    return out;
  }

 private:
  std::vector<std::pair<std::string, std::string>> rows_;
};

std::string subset_label(SubsetMask s, int k) {
  std::string out = "{";
  bool first = true;
  for (int i = 0; i < k; ++i) {
    if (!(s >> i & 1U)) continue;
    if (!first) out += ",";
    out += std::to_string(i + 1);
    first = false;
  }
  return out + "}";
}

Rational json_rational(const json& j, const std::string& key, const Rational& fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (v.is_string()) return parse_rational(v.get<std::string>());
  if (v.is_number_integer()) return Rational(v.get<long>());
  if (v.is_number()) return parse_rational(v.dump());
  throw Error("config field '" + key + "' must be a number or a rational string");
}

template <class T>
T json_value(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error("config field '" + key + "' has the wrong type");
  }
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(what + " is not valid JSON: " + e.what());
  }
}

fs::path relative_to(const fs::path& base_file, const std::string& path) {
  fs::path p(path);
  return p.is_absolute() ? p : base_file.parent_path() / p;
}

Predicate config_predicate(RunContext& ctx, const json& cfg, const fs::path& cfg_path) {
  if (cfg.contains("predicate")) return parse_predicate(cfg["predicate"].dump());
  if (cfg.contains("predicate_file")) {
    return parse_predicate(
        ctx.read_input(relative_to(cfg_path, cfg["predicate_file"].get<std::string>())));
  }
  throw Error("config needs predicate or predicate_file");
}

FiniteMeasure config_measure(RunContext& ctx, const json& cfg, const fs::path& cfg_path,
                             const Predicate& f, bool first_moments) {
  if (cfg.contains("measure")) return parse_measure(cfg["measure"].dump());
  if (cfg.contains("measure_file")) {
    return parse_measure(
        ctx.read_input(relative_to(cfg_path, cfg["measure_file"].get<std::string>())));
  }
  const auto strategy =
      parse_strategy(json_value<std::string>(cfg, "measure_strategy", "symmetrized_orbits"));
  auto [measure, report] = find_vanishing_measure(f, strategy, {}, first_moments);
  if (!measure) {
    throw Error("no vanishing measure found with strategy " + report.strategy + ": " + report.note);
  }
  return *measure;
}

std::vector<CubeDistribution> parse_support(const std::string& text, int k) {
  json j = parse_json(text, "support file");
  if (!j.is_array()) throw Error("support file must be a JSON array of distributions");
  std::vector<CubeDistribution> out;
  for (const auto& d : j) {
    std::vector<Rational> probs(std::size_t{1} << k, Rational(0));
    for (const auto& [key, value] : d.items()) {
      probs[assignment_from_string(key, k)] = parse_rational(value.get<std::string>());
    }
    out.emplace_back(k, std::move(probs));
  }
  return out;
}

// ---- predicate analyze ------------------------------------------------------

void predicate_analyze(RunContext& ctx, const std::string& file) {
  Predicate f = parse_predicate(ctx.read_input(file));
  const int k = f.arity();
  Table t;
  json j;
  t.add("arity", k);
  t.add("rho", f.rho());
  t.add("num_satisfying", f.num_satisfying());
  t.add("symmetric", is_symmetric(f));
  j["arity"] = k;
  j["rho"] = to_string(f.rho());
  j["num_satisfying"] = f.num_satisfying();
  j["symmetric"] = is_symmetric(f);
  j["satisfying"] = json::array();
  for (Assignment x : f.satisfying()) j["satisfying"].push_back(assignment_to_string(x, k));
  Rational parseval = 0;
  j["fourier"] = json::object();
  for (SubsetMask s = 0; s < f.table_size(); ++s) {
    const Rational& c = f.spectrum()[s];
    parseval += c * c;
    if (sgn(c) == 0) continue;
    t.add("fhat" + subset_label(s, k), c);
    j["fourier"][subset_label(s, k)] = to_string(c);
  }
  t.add("parseval_sum", parseval);
  j["parseval_sum"] = to_string(parseval);
  ctx.write_output("predicate.tsv", t.tsv());
  ctx.write_output("predicate.json", j.dump(2));
  std::cout << t.tsv();
}

// ---- vanishing search -------------------------------------------------------

json report_json(const SearchReport& r) {
  json j;
  j["strategy"] = r.strategy;
  j["first_moments_only"] = r.first_moments_only;
  j["support_size"] = r.support_size;
  j["found"] = r.found;
  j["lp_rows"] = r.lp_rows;
  j["constrained_levels"] = r.constrained_levels;
  j["binding_levels"] = r.binding_levels;
  std::vector<std::string> farkas;
  for (const auto& y : r.farkas) farkas.push_back(to_string(y));
  j["farkas"] = farkas;
  j["farkas_verified"] = r.farkas_verified;
  j["note"] = r.note;
  return j;
}

void vanishing_search(RunContext& ctx, const std::string& file, const std::string& strategy,
                      const std::string& support_file, bool first_moments) {
  Predicate f = parse_predicate(ctx.read_input(file));
  const auto s = parse_strategy(strategy);
  std::vector<CubeDistribution> custom;
  if (s == SupportStrategy::kCustom) {
    if (support_file.empty()) throw Error("strategy custom needs --support");
    custom = parse_support(ctx.read_input(support_file), f.arity());
  }
  auto [measure, report] = find_vanishing_measure(f, s, custom, first_moments);
  ctx.config()["strategy"] = strategy;
  ctx.config()["first_moments"] = first_moments;
  json j = report_json(report);
  if (measure) {
    j["measure"] = parse_json(serialize_measure(*measure), "measure");
    ctx.write_output("measure.json", serialize_measure(*measure));
  }
  Table t;
  t.add("strategy", report.strategy);
  t.add("first_moments_only", report.first_moments_only);
  t.add("support_size", report.support_size);
  t.add("found", report.found);
  t.add("lp_rows", report.lp_rows);
  t.add("farkas_verified", report.farkas_verified);
  if (measure) t.add("atoms", measure->size());
  if (!report.note.empty()) t.add("note", report.note);
  ctx.write_output("vanishing.tsv", t.tsv());
  ctx.write_output("vanishing.json", j.dump(2));
  std::cout << t.tsv();
}

// ---- charlp check -----------------------------------------------------------

void charlp_check(RunContext& ctx, const std::string& file) {
  Predicate f = parse_predicate(ctx.read_input(file));
  const int k = f.arity();
  auto w = charlp_symmetric_check(f);
  int lo = k + 1;
  int hi = -k - 1;
  for (Assignment x : f.satisfying()) {
    int sum = 0;
    for (int i = 0; i < k; ++i) sum += coordinate(x, i);
    lo = std::min(lo, sum);
    hi = std::max(hi, sum);
  }
  std::string message;
  json j;
  j["member"] = w.member;
  if (w.member) {
    message = "member; witness x=" + assignment_to_string(*w.x, k) +
              " y=" + assignment_to_string(*w.y, k);
    j["x"] = assignment_to_string(*w.x, k);
    j["y"] = assignment_to_string(*w.y, k);
  } else if (f.num_satisfying() == 0) {
    message = "not a member; no satisfying assignment";
  } else if (lo > 0) {
    message = "not a member; all satisfying sums >= " + std::to_string(lo);
  } else {
    message = "not a member; all satisfying sums <= " + std::to_string(hi);
  }
  j["message"] = message;
  Table t;
  t.add("member", w.member);
  t.add("message", message);
  ctx.write_output("charlp.tsv", t.tsv());
  ctx.write_output("charlp.json", j.dump(2));
  std::cout << message << "\n";
}

// ---- game value -------------------------------------------------------------

struct GameArgs {
  std::string predicate;
  std::vector<int> p_grid{1};
  std::vector<int> q_grid{0};
  std::string delta = "1/4";
  int d = 0;
  std::size_t samples = 20000;
  std::uint64_t psi_budget = 6561;
  bool no_guard = false;
  std::size_t random_strategies = 32;
  int br_rounds = 4;
  std::size_t br_samples = 20000;
};

void game_value_cmd(RunContext& ctx, const GameArgs& a, const Globals& g) {
  Predicate f = parse_predicate(ctx.read_input(a.predicate));
  ScanOptions opt;
  opt.delta = parse_rational(a.delta);
  opt.d = a.d;
  opt.samples = a.samples;
  opt.seed = g.seed;
  opt.psi_budget = a.psi_budget;
  opt.guard = !a.no_guard;
  opt.heuristic.random_strategies = a.random_strategies;
  opt.heuristic.best_response_rounds = a.br_rounds;
  opt.heuristic.best_response_samples = a.br_samples;
  auto report = scan_limits(f, a.p_grid, a.q_grid, opt);
  auto& c = ctx.config();
  c["p_grid"] = a.p_grid;
  c["q_grid"] = a.q_grid;
  c["delta"] = a.delta;
  c["d"] = a.d;
  c["samples"] = a.samples;
  c["psi_budget"] = a.psi_budget;
  c["guard"] = opt.guard;
  json j;
  j["guard"] = report.guard;
  j["grid"] = json::array();
  for (const auto& cell : report.grid) {
    j["grid"].push_back({{"p", cell.p},
                         {"q", cell.q},
                         {"value", cell.value},
                         {"ci_low", cell.ci_low},
                         {"ci_high", cell.ci_high},
                         {"regime", cell.exact ? "exact" : "heuristic lower bound"},
                         {"dev_points", cell.dev_points},
                         {"strategies", cell.strategies}});
  }
  j["violations"] = report.violations;
  const std::string tsv = scan_report_tsv(report);
  ctx.write_output("game.tsv", tsv);
  ctx.write_output("game.json", j.dump(2));
  std::cout << tsv;
  for (const auto& v : report.violations) std::cout << "violation: " << v << "\n";
}

// ---- gap sa -----------------------------------------------------------------

void gap_sa(RunContext& ctx, const std::string& file, const Globals& g) {
  const fs::path cfg_path(file);
  json cfg = parse_json(ctx.read_input(cfg_path), "SA gap config");
  ctx.config() = cfg;
  SaGapConfig c{.f = config_predicate(ctx, cfg, cfg_path)};
  c.lambda = config_measure(ctx, cfg, cfg_path, c.f, true);
  c.epsilon = json_rational(cfg, "epsilon", c.epsilon);
  c.n = json_value<int>(cfg, "n", c.n);
  c.density = json_rational(cfg, "density", c.density);
  c.eta = json_rational(cfg, "eta", c.eta);
  c.d_ball = json_value<int>(cfg, "d_ball", c.d_ball);
  c.r = json_value<int>(cfg, "r", c.r);
  c.delta = json_rational(cfg, "delta", c.delta);
  c.seed = g.seed;
  const int girth_target = json_value<int>(cfg, "girth", 0);

  SaGapInstance inst = generate_sa_instance(c);
  PruneResult pr{.phi = inst.phi};
  const int target =
      girth_target > 0 ? girth_target : 2 * (inst.phi.num_vars() + static_cast<int>(inst.phi.size()));
  SaGapInstance pruned = prune_instance(inst, target, &pr);
  SaAssembly assembly = assemble_sa_solution(pruned);
  CorrectionResult corrected = correct_local_distributions(assembly.family);
  const auto after = verify_consistency(corrected.family);

  Table t;
  json j;
  t.add("layers", inst.s + 1);
  t.add("constraints", inst.phi.size());
  t.add("active_variables", inst.active_variables());
  t.add("pruned_constraints", pr.removed);
  t.add("pruned_fraction", pr.removed_fraction);
  t.add("girth_after", pr.girth_after ? std::to_string(*pr.girth_after) : std::string("forest"));
  t.add("violation_before", assembly.consistency.max_violation);
  t.add("violation_after", after.max_violation);
  t.add("correction_l1", corrected.total_l1);
  t.add("sa_objective_before", sa_objective(pruned.phi, assembly.family));
  t.add("sa_objective_after", sa_objective(pruned.phi, corrected.family));
  j["layers"] = inst.s + 1;
  j["constraints"] = inst.phi.size();
  j["active_variables"] = inst.active_variables();
  j["pruned_constraints"] = pr.removed;
  j["pruned_fraction"] = pr.removed_fraction;
  j["violation_before"] = to_string(assembly.consistency.max_violation);
  j["violation_after"] = to_string(after.max_violation);
  j["correction_l1"] = to_string(corrected.total_l1);
  j["sa_objective_after"] = to_string(sa_objective(pruned.phi, corrected.family));
  std::vector<int> mapping;
  CspInstance compact = compact_instance(inst.phi, &mapping);
  if (compact.num_vars() <= kMaxBruteForceVars) {
    auto bf = brute_force_opt(compact, g.jobs);
    t.add("brute_force_max", bf.opt);
    t.add("brute_force_min", bf.min);
    j["brute_force_max"] = to_string(bf.opt);
    j["brute_force_min"] = to_string(bf.min);
  } else {
    t.add("brute_force", std::string("skipped: too many active variables"));
  }
  ctx.write_output("instance.json", serialize_instance(inst.phi));
  ctx.write_output("provenance.json", serialize_provenance(inst));
  ctx.write_output("pruned_instance.json", serialize_instance(pruned.phi));
  ctx.write_output("family.json", serialize_family(corrected.family));
  ctx.write_output("gap_sa.tsv", t.tsv());
  ctx.write_output("gap_sa.json", j.dump(2));
  std::cout << t.tsv();
}

// ---- gap sdp ----------------------------------------------------------------

void gap_sdp(RunContext& ctx, const std::string& file, const Globals& g) {
  const fs::path cfg_path(file);
  json cfg = parse_json(ctx.read_input(cfg_path), "SDP gap config");
  ctx.config() = cfg;
  SdpGapConfig c{.f = config_predicate(ctx, cfg, cfg_path)};
  if (!cfg.contains("measure") && !cfg.contains("measure_file") &&
      !cfg.contains("measure_strategy")) {
    cfg["measure_strategy"] = "pairwise_point";
  }
  c.lambda = config_measure(ctx, cfg, cfg_path, c.f, false);
  c.delta = json_rational(cfg, "delta", c.delta);
  c.d = json_value<int>(cfg, "d", c.d);
  c.epsilon = json_rational(cfg, "epsilon", c.epsilon);
  c.net_size = json_value<int>(cfg, "net_size", c.net_size);
  c.m = json_value<std::size_t>(cfg, "m", c.m);
  c.max_rejection = json_value<double>(cfg, "max_rejection", c.max_rejection);
  c.seed = g.seed;
  auto inst = generate_sdp_gap_instance(c);
  const double tol = json_value<double>(cfg, "verify_tol", 5 * to_double(c.epsilon));
  auto v = verify_basic_solution(inst.phi, inst.solution, tol);
  Table t;
  json j;
  t.add("constraints", inst.phi.size());
  t.add("variables", inst.phi.num_vars());
  t.add("attempts", inst.attempts);
  t.add("rejected_not_good", inst.rejected_not_good);
  t.add("rejected_repeat", inst.rejected_repeat);
  t.add("max_snap_drift", inst.max_snap_drift);
  t.add("frac", v.frac);
  t.add("max_pair", v.max_pair);
  t.add("max_singleton", v.max_singleton);
  t.add("max_orthogonality", v.max_orthogonality);
  t.add("verification_passes", v.passes);
  j["constraints"] = inst.phi.size();
  j["attempts"] = inst.attempts;
  j["rejected_not_good"] = inst.rejected_not_good;
  j["rejected_repeat"] = inst.rejected_repeat;
  j["max_snap_drift"] = inst.max_snap_drift;
  j["frac"] = to_string(v.frac);
  j["max_pair"] = v.max_pair;
  j["verification_passes"] = v.passes;
  if (inst.phi.num_vars() <= kMaxBruteForceVars) {
    auto bf = brute_force_opt(inst.phi, g.jobs);
    t.add("brute_force_max", bf.opt);
    t.add("brute_force_min", bf.min);
    j["brute_force_max"] = to_string(bf.opt);
    j["brute_force_min"] = to_string(bf.min);
  }
  ctx.write_output("instance.json", serialize_instance(inst.phi));
  ctx.write_output("basic.json", serialize_basic_solution(inst.solution));
  ctx.write_output("gap_sdp.tsv", t.tsv());
  ctx.write_output("gap_sdp.json", j.dump(2));
  std::cout << t.tsv();
}

// ---- round ------------------------------------------------------------------

struct RoundArgs {
  std::string instance;
  std::string solution;
  std::string family;
  std::vector<std::string> psis;
  std::vector<double> weights;
  std::string map = "identity";
  std::string delta = "0";
  int d = 0;
  std::size_t trials = 2000;
  double verify_tol = 1e-6;
};

void round_output(RunContext& ctx, const RoundingReport& report, const RoundingScheme& scheme) {
  Table t;
  t.add("kind", std::string(to_string(scheme.kind)));
  t.add("expected_value", report.expected_value);
  t.add("std_error", report.std_error);
  if (report.exact_value) t.add("exact_value", *report.exact_value);
  t.add("rho", report.rho);
  t.add("analytic", report.analytic);
  t.add("trials", report.trials);
  t.add("sampled_value", report.sampled_value);
  ctx.write_output("round.tsv", t.tsv());
  ctx.write_output("round.json", serialize_rounding_report(report, scheme));
  std::cout << t.tsv();
}

void round_sdp_cmd(RunContext& ctx, const RoundArgs& a, const Globals& g) {
  CspInstance phi = parse_instance(ctx.read_input(a.instance));
  BasicSolution sol = parse_basic_solution(ctx.read_input(a.solution));
  RoundingScheme scheme;
  scheme.kind = RoundingKind::kGaussian;
  scheme.delta = parse_rational(a.delta);
  scheme.d = a.d;
  scheme.seed = g.seed;
  scheme.trials = a.trials;
  scheme.jobs = g.jobs;
  if (a.psis.empty()) throw Error("round sdp needs at least one --psi file");
  if (!a.weights.empty() && a.weights.size() != a.psis.size()) {
    throw Error("--weights needs one weight per --psi");
  }
  for (std::size_t i = 0; i < a.psis.size(); ++i) {
    const double w = a.weights.empty() ? 1.0 / a.psis.size() : a.weights[i];
    scheme.psis.push_back({w, parse_psi(ctx.read_input(a.psis[i]))});
  }
  ctx.config()["delta"] = a.delta;
  ctx.config()["d"] = a.d;
  ctx.config()["trials"] = a.trials;
  ctx.config()["weights"] = a.weights;
  round_output(ctx, round_sdp(phi, sol, scheme, a.verify_tol), scheme);
}

void round_lp_cmd(RunContext& ctx, const RoundArgs& a, const Globals& g) {
  CspInstance phi = parse_instance(ctx.read_input(a.instance));
  LocalDistributionFamily fam = parse_family(ctx.read_input(a.family));
  RoundingScheme scheme;
  scheme.kind = RoundingKind::kLpBias;
  scheme.bias_map = OddBiasMap::parse(a.map);
  scheme.seed = g.seed;
  scheme.trials = a.trials;
  scheme.jobs = g.jobs;
  ctx.config()["map"] = a.map;
  ctx.config()["trials"] = a.trials;
  round_output(ctx, round_lp(phi, fam, scheme), scheme);
}

// ---- verify -----------------------------------------------------------------

void verify_instance(RunContext& ctx, const std::string& file, const Globals& g) {
  CspInstance phi = parse_instance(ctx.read_input(file));
  Table t;
  json j;
  auto gi = girth(phi);
  t.add("variables", phi.num_vars());
  t.add("constraints", phi.size());
  t.add("girth", gi ? std::to_string(*gi) : std::string("forest"));
  j["variables"] = phi.num_vars();
  j["constraints"] = phi.size();
  j["girth"] = gi ? json(*gi) : json("forest");
  std::vector<int> mapping;
  CspInstance compact = compact_instance(phi, &mapping);
  if (compact.num_vars() <= kMaxBruteForceVars) {
    auto bf = brute_force_opt(compact, g.jobs);
    t.add("opt", bf.opt);
    t.add("min", bf.min);
    t.add("mean", bf.mean());
    j["opt"] = to_string(bf.opt);
    j["min"] = to_string(bf.min);
    j["mean"] = bf.mean();
  }
  ctx.write_output("verify_instance.tsv", t.tsv());
  ctx.write_output("verify_instance.json", j.dump(2));
  std::cout << t.tsv();
}

void verify_basic(RunContext& ctx, const std::string& instance, const std::string& solution,
                  const Globals& g) {
  CspInstance phi = parse_instance(ctx.read_input(instance));
  BasicSolution sol = parse_basic_solution(ctx.read_input(solution));
  auto v = verify_basic_solution(phi, sol, g.tol);
  Table t;
  t.add("tol", v.tol);
  t.add("unit_norm_error", v.unit_norm_error);
  t.add("max_orthogonality", v.max_orthogonality);
  t.add("max_sum_identity", v.max_sum_identity);
  t.add("max_singleton", v.max_singleton);
  t.add("max_pair", v.max_pair);
  t.add("max_normalization", v.max_normalization);
  t.add("frac", v.frac);
  t.add("passes", v.passes);
  json j = {{"tol", v.tol},
            {"unit_norm_error", v.unit_norm_error},
            {"max_orthogonality", v.max_orthogonality},
            {"max_sum_identity", v.max_sum_identity},
            {"max_singleton", v.max_singleton},
            {"max_pair", v.max_pair},
            {"max_normalization", v.max_normalization},
            {"frac", to_string(v.frac)},
            {"passes", v.passes}};
  ctx.write_output("verify_basic.tsv", t.tsv());
  ctx.write_output("verify_basic.json", j.dump(2));
  std::cout << t.tsv();
}

void verify_family(RunContext& ctx, const std::string& family, const std::string& instance) {
  LocalDistributionFamily fam = parse_family(ctx.read_input(family));
  auto rep = verify_consistency(fam);
  Table t;
  json j;
  t.add("subsets", fam.size());
  t.add("pairs_checked", rep.pairs_checked);
  t.add("max_violation", rep.max_violation);
  t.add("consistent", rep.consistent());
  j["subsets"] = fam.size();
  j["pairs_checked"] = rep.pairs_checked;
  j["max_violation"] = to_string(rep.max_violation);
  j["consistent"] = rep.consistent();
  if (!instance.empty()) {
    CspInstance phi = parse_instance(ctx.read_input(instance));
    const Rational obj = sa_objective(phi, fam);
    t.add("objective", obj);
    j["objective"] = to_string(obj);
  }
  ctx.write_output("verify_family.tsv", t.tsv());
  ctx.write_output("verify_family.json", j.dump(2));
  std::cout << t.tsv();
}

// ---- sa ---------------------------------------------------------------------

void sa_build(RunContext& ctx, const std::string& instance, int r) {
  CspInstance phi = parse_instance(ctx.read_input(instance));
  SaLpLayout layout;
  LinearProgram lp = build_sherali_adams(phi, r, &layout);
  auto result = lp_solve(lp);
  ctx.config()["r"] = r;
  Table t;
  json j;
  t.add("r", r);
  t.add("lp_variables", static_cast<std::size_t>(lp.num_vars));
  t.add("lp_constraints", lp.constraints.size());
  t.add("status", std::string(to_string(result.status)));
  j["r"] = r;
  j["status"] = to_string(result.status);
  if (result.status == LpStatus::kOptimal) {
    t.add("objective", result.objective);
    t.add("pivots", static_cast<std::size_t>(result.pivots));
    j["objective"] = to_string(result.objective);
    ctx.write_output("family.json",
                     serialize_family(family_from_solution(layout, result.primal)));
  }
  ctx.write_output("sa_build.tsv", t.tsv());
  ctx.write_output("sa_build.json", j.dump(2));
  std::cout << t.tsv();
}

void sa_objective_cmd(RunContext& ctx, const std::string& instance, const std::string& family) {
  CspInstance phi = parse_instance(ctx.read_input(instance));
  LocalDistributionFamily fam = parse_family(ctx.read_input(family));
  const Rational obj = sa_objective(phi, fam);
  Table t;
  t.add("objective", obj);
  t.add("objective_decimal", to_double(obj));
  ctx.write_output("sa_objective.tsv", t.tsv());
  ctx.write_output("sa_objective.json", json({{"objective", to_string(obj)}}).dump(2));
  std::cout << t.tsv();
}

// ---- replay -----------------------------------------------------------------

int replay(const std::string& manifest_path, const std::string& out_dir) {
  json m = parse_json(read_file(manifest_path), "manifest");
  std::vector<std::string> argv = m.at("argv").get<std::vector<std::string>>();
  // Drop any recorded --out-dir and point the rerun at the replay directory.
  std::vector<std::string> rerun{"reslab"};
  for (std::size_t i = 0; i < argv.size(); ++i) {
    if (argv[i] == "--out-dir") {
      ++i;
      continue;
    }
    if (argv[i].rfind("--out-dir=", 0) == 0) continue;
    rerun.push_back(argv[i]);
  }
  rerun.push_back("--out-dir");
  rerun.push_back(out_dir);
  std::ostringstream sink;
  auto* old = std::cout.rdbuf(sink.rdbuf());
  const int code = run(rerun);
  std::cout.rdbuf(old);
  if (code != 0) {
    std::cerr << "replay: rerun exited with code " << code << "\n";
    return 1;
  }
  int mismatches = 0;
  for (const auto& out : m.at("outputs")) {
    const std::string name = out.at("path").get<std::string>();
    const std::string digest = sha256_hex(read_file(fs::path(out_dir) / name));
    const bool same = digest == out.at("sha256").get<std::string>();
    std::cout << (same ? "same" : "DIFFERENT") << "\t" << name << "\n";
    if (!same) ++mismatches;
  }
  return mismatches == 0 ? 0 : 1;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"reslab: approximation-resistance workbench"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "master seed for every random stream");
  app.add_option("--jobs", g.jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--tol", g.tol, "float tolerance for verification");
  app.add_option("--out-dir", g.out_dir, "directory for artifacts and the run manifest");
  app.fallthrough();

  auto* pred = app.add_subcommand("predicate", "predicate tools")->require_subcommand(1);
  std::string file;
  auto* pred_analyze = pred->add_subcommand("analyze", "Fourier, density and symmetry table");
  pred_analyze->add_option("file", file, "predicate JSON")->required();

  auto* van = app.add_subcommand("vanishing", "vanishing-measure search")->require_subcommand(1);
  auto* van_search = van->add_subcommand("search", "finite-support LP search");
  std::string strategy = "symmetrized_orbits";
  std::string support_file;
  bool first_moments = false;
  van_search->add_option("file", file, "predicate JSON")->required();
  van_search->add_option("--strategy", strategy, "support strategy")
      ->check(CLI::IsMember(
          {"pairwise_point", "satisfying_point_masses", "symmetrized_orbits", "custom"}));
  van_search->add_option("--support", support_file, "custom support JSON");
  van_search->add_flag("--first-moments", first_moments, "first-moment (LP) variant");

  auto* charlp = app.add_subcommand("charlp", "LP characterization")->require_subcommand(1);
  auto* charlp_check_cmd = charlp->add_subcommand("check", "symmetric-predicate test");
  charlp_check_cmd->add_option("file", file, "predicate JSON")->required();

  auto* game = app.add_subcommand("game", "discretized games")->require_subcommand(1);
  auto* game_value_sub = game->add_subcommand("value", "V(p,q) grid with monotonicity report");
  GameArgs ga;
  game_value_sub->add_option("--predicate", ga.predicate, "predicate JSON")->required();
  game_value_sub->add_option("--p-grid", ga.p_grid, "comma-separated p values")->delimiter(',');
  game_value_sub->add_option("--q-grid", ga.q_grid, "comma-separated q values")->delimiter(',');
  game_value_sub->add_option("--delta", ga.delta, "body shift");
  game_value_sub->add_option("--d", ga.d, "dimension (0 means k+1)");
  game_value_sub->add_option("--samples", ga.samples, "Monte Carlo samples");
  game_value_sub->add_option("--psi-budget", ga.psi_budget, "exact enumeration budget");
  game_value_sub->add_flag("--no-guard", ga.no_guard, "use opay instead of pay");
  game_value_sub->add_option("--random-strategies", ga.random_strategies);
  game_value_sub->add_option("--br-rounds", ga.br_rounds);
  game_value_sub->add_option("--br-samples", ga.br_samples);

  auto* gap = app.add_subcommand("gap", "integrality-gap generators")->require_subcommand(1);
  auto* gap_sa_sub = gap->add_subcommand("sa", "Sherali-Adams gap instance");
  gap_sa_sub->add_option("config", file, "config JSON")->required();
  auto* gap_sdp_sub = gap->add_subcommand("sdp", "basic-relaxation gap instance");
  gap_sdp_sub->add_option("config", file, "config JSON")->required();

  auto* round = app.add_subcommand("round", "rounding algorithms")->require_subcommand(1);
  RoundArgs ra;
  auto* round_sdp_sub = round->add_subcommand("sdp", "d-dimensional Gaussian rounding");
  round_sdp_sub->add_option("--instance", ra.instance)->required();
  round_sdp_sub->add_option("--solution", ra.solution)->required();
  round_sdp_sub->add_option("--psi", ra.psis, "psi JSON (repeatable)")->required();
  round_sdp_sub->add_option("--weights", ra.weights)->delimiter(',');
  round_sdp_sub->add_option("--delta", ra.delta);
  round_sdp_sub->add_option("--d", ra.d);
  round_sdp_sub->add_option("--trials", ra.trials);
  round_sdp_sub->add_option("--verify-tol", ra.verify_tol);
  auto* round_lp_sub = round->add_subcommand("lp", "independent bias rounding");
  round_lp_sub->add_option("--instance", ra.instance)->required();
  round_lp_sub->add_option("--family", ra.family)->required();
  round_lp_sub->add_option("--map", ra.map, "zero, identity, sign or knots:x:y,...");
  round_lp_sub->add_option("--trials", ra.trials);

  auto* verify = app.add_subcommand("verify", "artifact verification")->require_subcommand(1);
  std::string instance;
  std::string solution;
  std::string family;
  auto* verify_instance_sub = verify->add_subcommand("instance", "instance statistics");
  verify_instance_sub->add_option("file", file)->required();
  auto* verify_basic_sub = verify->add_subcommand("basic", "basic-relaxation solution");
  verify_basic_sub->add_option("--instance", instance)->required();
  verify_basic_sub->add_option("--solution", solution)->required();
  auto* verify_family_sub = verify->add_subcommand("family", "local-distribution consistency");
  verify_family_sub->add_option("--family", family)->required();
  verify_family_sub->add_option("--instance", instance);

  auto* sa = app.add_subcommand("sa", "Sherali-Adams LP")->require_subcommand(1);
  int rounds = 2;
  auto* sa_build_sub = sa->add_subcommand("build", "solve the r-round LP exactly");
  sa_build_sub->add_option("--instance", instance)->required();
  sa_build_sub->add_option("--r", rounds)->check(CLI::PositiveNumber);
  auto* sa_objective_sub = sa->add_subcommand("objective", "objective of a family");
  sa_objective_sub->add_option("--instance", instance)->required();
  sa_objective_sub->add_option("--family", family)->required();

  std::string manifest;
  auto* replay_sub = app.add_subcommand("replay", "rerun a manifest and diff outputs");
  replay_sub->add_option("manifest", manifest)->required();

  for (auto* sub : app.get_subcommands({})) {
    sub->fallthrough();
    for (auto* leaf : sub->get_subcommands({})) leaf->fallthrough();
  }

  std::vector<const char*> cargv;
  for (const auto& a : args) cargv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargv.size()), const_cast<char**>(cargv.data()));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  std::vector<std::string> recorded(args.begin() + (args.empty() ? 0 : 1), args.end());
  try {
    if (*replay_sub) return replay(manifest, g.out_dir);
    std::string command;
    for (auto* sub : app.get_subcommands()) {
      command = sub->get_name();
      for (auto* leaf : sub->get_subcommands()) command += " " + leaf->get_name();
    }
    RunContext ctx(command, recorded, g.out_dir, g.seed, g.jobs, g.tol);
    if (*pred_analyze) {
      predicate_analyze(ctx, file);
    } else if (*van_search) {
      vanishing_search(ctx, file, strategy, support_file, first_moments);
    } else if (*charlp_check_cmd) {
      charlp_check(ctx, file);
    } else if (*game_value_sub) {
      game_value_cmd(ctx, ga, g);
    } else if (*gap_sa_sub) {
      gap_sa(ctx, file, g);
    } else if (*gap_sdp_sub) {
      gap_sdp(ctx, file, g);
    } else if (*round_sdp_sub) {
      round_sdp_cmd(ctx, ra, g);
    } else if (*round_lp_sub) {
      round_lp_cmd(ctx, ra, g);
    } else if (*verify_instance_sub) {
      verify_instance(ctx, file, g);
    } else if (*verify_basic_sub) {
      verify_basic(ctx, instance, solution, g);
    } else if (*verify_family_sub) {
      verify_family(ctx, family, instance);
    } else if (*sa_build_sub) {
      sa_build(ctx, instance, rounds);
    } else if (*sa_objective_sub) {
      sa_objective_cmd(ctx, instance, family);
    }
    ctx.write_manifest();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace reslab::cli
