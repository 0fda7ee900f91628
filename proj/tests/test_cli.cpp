#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <unistd.h>

#include "cli.hpp"
#include "doctest.h"
#include "json.hpp"
#include "reslab/csp.hpp"
#include "reslab/gaussian.hpp"
#include "reslab/sherali_adams.hpp"

namespace fs = std::filesystem;
using reslab::cli::run;

namespace {

const fs::path kData = RESLAB_DATA_DIR;

fs::path scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("reslab_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result call(std::vector<std::string> args) {
  args.insert(args.begin(), "reslab");
  std::ostringstream out, err;
  auto* old_out = std::cout.rdbuf(out.rdbuf());
  auto* old_err = std::cerr.rdbuf(err.rdbuf());
  const int code = run(args);
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string data(const char* name) { return (kData / name).string(); }

}  // namespace

TEST_CASE("predicate analyze reports the 3-parity spectrum") {
  const auto dir = scratch() / "analyze";
  auto r = call({"--out-dir", dir.string(), "predicate", "analyze", data("parity3.json")});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("rho\t1/2") != std::string::npos);
  CHECK(r.out.find("fhat{1,2,3}\t1/2") != std::string::npos);
  CHECK(r.out.find("fhat{1}") == std::string::npos);
  auto j = nlohmann::json::parse(slurp(dir / "predicate.json"));
  CHECK(j["parseval_sum"] == "1/2");
  CHECK(fs::exists(dir / "predicate.tsv"));
  auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(m["command"] == "predicate analyze");
  CHECK(m["outputs"].size() == 2);
  CHECK(m["inputs"].size() == 1);
}

TEST_CASE("charlp check messages") {
  auto maj = call({"--out-dir", (scratch() / "maj").string(), "charlp", "check", data("maj3.json")});
  CHECK(maj.code == 0);
  CHECK(maj.out.find("not a member") != std::string::npos);
  auto lin = call({"--out-dir", (scratch() / "lin").string(), "charlp", "check", data("two_lin.json")});
  CHECK(lin.code == 0);
  CHECK(lin.out.find("member; witness") != std::string::npos);
}

TEST_CASE("exit codes") {
  CHECK(call({"predicate", "analyze", data("parity3.json"), "--bogus"}).code == 2);
  CHECK(call({}).code == 2);
  CHECK(call({"--version"}).code == 0);
  auto missing = call({"--out-dir", (scratch() / "missing").string(), "predicate", "analyze",
                       (scratch() / "nope.json").string()});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("error:") != std::string::npos);
  auto custom = call({"--out-dir", (scratch() / "custom").string(), "vanishing", "search",
                      data("parity3.json"), "--strategy", "custom"});
  CHECK(custom.code == 1);
  CHECK(call({"vanishing", "search", data("parity3.json"), "--strategy", "bogus"}).code == 2);
}

TEST_CASE("vanishing search finds the 3-parity measure") {
  const auto dir = scratch() / "vanish";
  auto r = call({"--out-dir", dir.string(), "vanishing", "search", data("parity3.json"),
                 "--strategy", "pairwise_point"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("found") != std::string::npos);
  CHECK(fs::exists(dir / "manifest.json"));
}

TEST_CASE("gap sa artifacts verify and replay identically") {
  const auto dir = scratch() / "gapsa";
  auto r = call({"--out-dir", dir.string(), "gap", "sa", data("gap_sa_parity3.json")});
  REQUIRE(r.code == 0);
  for (const char* name : {"instance.json", "provenance.json", "pruned_instance.json", "family.json",
                           "gap_sa.tsv", "gap_sa.json", "manifest.json"}) {
    CHECK(fs::exists(dir / name));
  }
  // Artifacts parse back through the library.
  auto pruned = reslab::parse_instance(slurp(dir / "pruned_instance.json"));
  CHECK_FALSE(pruned.constraints().empty());
  auto fam = reslab::parse_family(slurp(dir / "family.json"));
  CHECK(reslab::verify_consistency(fam).consistent());

  auto vf = call({"--out-dir", (scratch() / "vf").string(), "verify", "family", "--family",
                  (dir / "family.json").string(), "--instance", (dir / "pruned_instance.json").string()});
  CHECK(vf.code == 0);
  CHECK(vf.out.find("consistent\tyes") != std::string::npos);

  auto rep = call({"--out-dir", (scratch() / "replay").string(), "replay",
                   (dir / "manifest.json").string()});
  CHECK(rep.code == 0);
  CHECK(rep.out.find("DIFFERENT") == std::string::npos);
  CHECK(rep.out.find("same\tfamily.json") != std::string::npos);
}

TEST_CASE("gap sdp, verify basic and round sdp") {
  const auto dir = scratch() / "gapsdp";
  auto r = call({"--out-dir", dir.string(), "gap", "sdp", data("gap_sdp_parity3.json")});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("verification_passes\tyes") != std::string::npos);
  CHECK(r.out.find("frac\t19/20") != std::string::npos);
  auto vb = call({"--out-dir", (scratch() / "vb").string(), "--tol", "2", "verify", "basic",
                  "--instance", (dir / "instance.json").string(), "--solution",
                  (dir / "basic.json").string()});
  CHECK(vb.code == 0);
  CHECK(vb.out.find("passes\tyes") != std::string::npos);

  const auto psi = scratch() / "psi.json";
  reslab::PartitionedFunction one(0, 4);
  one.set_slot(0, 1);
  std::ofstream(psi) << reslab::serialize_psi(one);
  auto rs = call({"--out-dir", (scratch() / "rs").string(), "round", "sdp", "--instance",
                  (dir / "instance.json").string(), "--solution", (dir / "basic.json").string(),
                  "--psi", psi.string(), "--verify-tol", "2"});
  INFO(rs.err);
  CHECK(rs.code == 0);
  auto rj = nlohmann::json::parse(slurp(scratch() / "rs" / "round.json"));
  CHECK(rj["trials"].get<int>() > 0);
  CHECK(rj["expected_value"].get<double>() >= 0);
  CHECK(rj["expected_value"].get<double>() <= 1);
}

TEST_CASE("sa build and objective round trip") {
  const auto inst = scratch() / "tiny.json";
  reslab::CspInstance phi(reslab::predicates::parity(3), 4,
                          {{{0, 1, 2}, {1, 1, 1}}, {{1, 2, 3}, {1, -1, 1}}});
  std::ofstream(inst) << reslab::serialize_instance(phi);
  const auto dir = scratch() / "sabuild";
  auto r = call({"--out-dir", dir.string(), "sa", "build", "--instance", inst.string(), "--r", "3"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("objective\t1") != std::string::npos);
  auto obj = call({"--out-dir", (scratch() / "saobj").string(), "sa", "objective", "--instance",
                   inst.string(), "--family", (dir / "family.json").string()});
  CHECK(obj.code == 0);
  CHECK(obj.out.find("objective\t1") != std::string::npos);
  CHECK(call({"--out-dir", dir.string(), "sa", "build", "--instance", inst.string(), "--r", "0"}).code == 2);
}
