#include "cli/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>
#include <stdexcept>

namespace rps::cli {

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot hash " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256: digest init failed");
  std::array<char, 1 << 16> buf{};
  while (is) {
    is.read(buf.data(), buf.size());
    if (is.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(is.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

RunManifest::RunManifest(std::string command, std::filesystem::path out_dir)
    : command_(std::move(command)), out_dir_(std::move(out_dir)) {}

void RunManifest::add_config(const std::filesystem::path& path) { configs_.push_back(path.string()); }

void RunManifest::set_seed(const std::string& name, std::uint64_t seed) { seeds_[name] = seed; }

StageRecord& RunManifest::stage(const std::string& name) {
  for (auto& s : stages_)
    if (s.name == name) return s;
  stages_.push_back({name, {}, {}});
  return stages_.back();
}

void RunManifest::input(const std::string& stage_name, const std::filesystem::path& path) {
  stage(stage_name).inputs.push_back({path.string(), sha256_file(path)});
}

void RunManifest::output(const std::string& stage_name, const std::filesystem::path& path) {
  stage(stage_name).outputs.push_back({std::filesystem::relative(path, out_dir_).generic_string(), sha256_file(path)});
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j;
  j["command"] = command_;
  j["config_paths"] = configs_;
  j["seeds"] = seeds_;
  j["output_directory"] = out_dir_.string();
  auto stages = nlohmann::json::array();
  for (const auto& s : stages_) {
    auto list = [](const std::vector<Artifact>& v) {
      auto a = nlohmann::json::array();
      for (const auto& x : v) a.push_back({{"path", x.path}, {"sha256", x.sha256}});
      return a;
    };
    stages.push_back({{"name", s.name}, {"inputs", list(s.inputs)}, {"outputs", list(s.outputs)}});
  }
  j["stages"] = stages;
  return j;
}

std::filesystem::path RunManifest::write() const {
  const auto path = out_dir_ / "manifest.json";
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << to_json().dump(2) << '\n';
  return path;
}

}  // namespace rps::cli
