#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace rps::cli {

std::string sha256_file(const std::filesystem::path& path);

struct Artifact {
  std::string path;
  std::string sha256;
};

struct StageRecord {
  std::string name;
  std::vector<Artifact> inputs;
  std::vector<Artifact> outputs;
};

// Record of one command invocation. Output paths are stored relative to the
// output directory so reruns into different directories compare equal.
class RunManifest {
 public:
  RunManifest(std::string command, std::filesystem::path out_dir);

  void add_config(const std::filesystem::path& path);
  void set_seed(const std::string& name, std::uint64_t seed);
  StageRecord& stage(const std::string& name);
  void input(const std::string& stage, const std::filesystem::path& path);
  void output(const std::string& stage, const std::filesystem::path& path);

  nlohmann::json to_json() const;
  std::filesystem::path write() const;

 private:
  std::string command_;
  std::filesystem::path out_dir_;
  std::vector<std::string> configs_;
  std::map<std::string, std::uint64_t> seeds_;
  std::vector<StageRecord> stages_;
};

}  // namespace rps::cli
