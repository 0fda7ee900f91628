#include "run_context.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <iomanip>
#include <sstream>

#include "reslab/rational.hpp"

namespace reslab::cli {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) {
    out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return out.str();
}

RunContext::RunContext(std::string command, std::vector<std::string> argv,
                       std::filesystem::path out_dir, std::uint64_t seed, int jobs, double tol)
    : command_(std::move(command)),
      argv_(std::move(argv)),
      out_dir_(std::move(out_dir)),
      seed_(seed),
      jobs_(jobs),
      tol_(tol) {}

std::string RunContext::read_input(const std::filesystem::path& path) {
  std::string bytes = read_file(path);
  inputs_.push_back({path.string(), sha256_hex(bytes)});
  return bytes;
}

void RunContext::write_output(const std::string& name, const std::string& content) {
  std::filesystem::create_directories(out_dir_);
  const auto path = out_dir_ / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out) throw Error("write failed for " + path.string());
  outputs_.push_back({name, sha256_hex(content)});
}

void RunContext::write_manifest() const {
  nlohmann::json j;
  j["tool"] = "reslab";
  j["version"] = kToolVersion;
  j["command"] = command_;
  j["argv"] = argv_;
  j["seed"] = seed_;
  j["jobs"] = jobs_;
  j["tol"] = tol_;
  j["config"] = config_;
  auto list = [](const std::vector<FileDigest>& files) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& f : files) a.push_back({{"path", f.path}, {"sha256", f.sha256}});
    return a;
  };
  j["inputs"] = list(inputs_);
  j["outputs"] = list(outputs_);
  std::filesystem::create_directories(out_dir_);
  std::ofstream out(out_dir_ / "manifest.json");
  out << j.dump(2) << "\n";
  if (!out) throw Error("cannot write the run manifest");
}

}  // namespace reslab::cli
