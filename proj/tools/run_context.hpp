#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace reslab::cli {

inline constexpr const char* kToolVersion = "0.1.0";

std::string read_file(const std::filesystem::path& path);
std::string sha256_hex(const std::string& bytes);

struct FileDigest {
  std::string path;
  std::string sha256;
};

// Collects inputs, outputs and the config snapshot of one run and writes
// them as manifest.json next to the outputs.
class RunContext {
 public:
  RunContext(std::string command, std::vector<std::string> argv, std::filesystem::path out_dir,
             std::uint64_t seed, int jobs, double tol);

  std::string read_input(const std::filesystem::path& path);
  void write_output(const std::string& name, const std::string& content);
  nlohmann::json& config() { return config_; }
  const std::filesystem::path& out_dir() const { return out_dir_; }
  void write_manifest() const;

 private:
  std::string command_;
  std::vector<std::string> argv_;
  std::filesystem::path out_dir_;
  std::uint64_t seed_;
  int jobs_;
  double tol_;
  nlohmann::json config_ = nlohmann::json::object();
  std::vector<FileDigest> inputs_;
  std::vector<FileDigest> outputs_;
};

}  // namespace reslab::cli
