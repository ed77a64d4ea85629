#pragma once

// Depth-sequence file formats.
//
// Raw binary (".dseq"), all little-endian:
//   "DSEQ" | version u16 | width u16 | height u16 | frame count u32 | rate f64
//   then per frame: timestamp f64 | width*height u16 depths (mm, 0 = invalid)
// Camera intrinsics and extrinsics live in a JSON sidecar "<file>.json".
//
// Per-frame images: a directory of 16-bit binary PGM files frame_NNNNN.pgm plus
// "sequence.json" holding the rate, timestamps, intrinsics and extrinsics.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rps/geometry.hpp"

namespace rps {

enum class DepthFormat { raw_binary, frame_images };

struct CameraCalibration {
  CameraIntrinsics intrinsics;
  ExtrinsicTransform extrinsics;
};

inline constexpr std::uint16_t dseq_version = 1;

namespace detail {

template <typename T>
void put_le(std::ostream& os, T value) {
  std::array<unsigned char, sizeof(T)> bytes{};
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  os.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T get_le(std::istream& is, const char* what) {
  std::array<unsigned char, sizeof(T)> bytes{};
  if (!is.read(reinterpret_cast<char*>(bytes.data()), sizeof(T)))
    throw FormatError(std::string("truncated file while reading ") + what);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

inline std::uint16_t depth_to_u16(float d) {
  if (!std::isfinite(d) || d < 0.0f || d > 65535.0f) throw ValidationError("depth value not representable as u16 mm");
  return static_cast<std::uint16_t>(std::lround(d));
}

}  // namespace detail

inline nlohmann::json to_json(const CameraCalibration& cal) {
  nlohmann::json j;
  j["intrinsics"] = {{"fx", cal.intrinsics.fx}, {"fy", cal.intrinsics.fy},
                     {"cx", cal.intrinsics.cx}, {"cy", cal.intrinsics.cy}};
  nlohmann::json rot = nlohmann::json::array();
  for (int r = 0; r < 3; ++r)
    rot.push_back({cal.extrinsics.rotation(r, 0), cal.extrinsics.rotation(r, 1), cal.extrinsics.rotation(r, 2)});
  j["extrinsics"] = {{"rotation", rot},
                     {"translation",
                      {cal.extrinsics.translation.x(), cal.extrinsics.translation.y(), cal.extrinsics.translation.z()}}};
  return j;
}

inline CameraCalibration calibration_from_json(const nlohmann::json& j) {
  CameraCalibration cal;
  try {
    const auto& in = j.at("intrinsics");
    cal.intrinsics = {in.at("fx").get<double>(), in.at("fy").get<double>(), in.at("cx").get<double>(),
                      in.at("cy").get<double>()};
    if (j.contains("extrinsics")) {
      const auto& ex = j.at("extrinsics");
      const auto& rot = ex.at("rotation");
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) cal.extrinsics.rotation(r, c) = rot.at(r).at(c).get<double>();
      const auto& tr = ex.at("translation");
      cal.extrinsics.translation = {tr.at(0).get<double>(), tr.at(1).get<double>(), tr.at(2).get<double>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("camera calibration JSON: ") + e.what());
  }
  if (!cal.intrinsics.valid()) throw ValidationError("camera calibration: fx and fy must be positive");
  cal.extrinsics.validate();
  return cal;
}

inline std::filesystem::path sidecar_path(const std::filesystem::path& dseq) {
  return dseq.string() + ".json";
}

inline CameraCalibration read_calibration(const std::filesystem::path& json_path) {
  std::ifstream is(json_path);
  if (!is) throw FormatError("cannot open calibration sidecar " + json_path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("calibration sidecar " + json_path.string() + ": " + e.what());
  }
  return calibration_from_json(j);
}

inline void write_dseq(const std::filesystem::path& path, const DepthSequence& seq,
                       const ExtrinsicTransform& extrinsics) {
  seq.validate(false);
  const auto& first = seq.frames.front();
  if (first.width > 65535 || first.height > 65535) throw ValidationError("write_dseq: image too large");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot create " + path.string());
  os.write("DSEQ", 4);
  detail::put_le<std::uint16_t>(os, dseq_version);
  detail::put_le<std::uint16_t>(os, static_cast<std::uint16_t>(first.width));
  detail::put_le<std::uint16_t>(os, static_cast<std::uint16_t>(first.height));
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(seq.frames.size()));
  detail::put_le<double>(os, seq.nominal_rate);
  for (const auto& f : seq.frames) {
    detail::put_le<double>(os, f.timestamp);
    for (float d : f.depth_mm) detail::put_le<std::uint16_t>(os, detail::depth_to_u16(d));
  }
  if (!os) throw std::runtime_error("write failed: " + path.string());

  std::ofstream js(sidecar_path(path));
  js << to_json(CameraCalibration{first.intrinsics, extrinsics}).dump(2) << '\n';
}

inline DepthSequence read_dseq(const std::filesystem::path& path, CameraCalibration* calibration = nullptr) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open depth sequence " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "DSEQ", 4) != 0) throw FormatError("depth sequence: bad magic");
  const auto version = detail::get_le<std::uint16_t>(is, "version");
  if (version != dseq_version) throw FormatError("depth sequence: unsupported version " + std::to_string(version));
  const int width = detail::get_le<std::uint16_t>(is, "width");
  const int height = detail::get_le<std::uint16_t>(is, "height");
  const auto count = detail::get_le<std::uint32_t>(is, "frame count");
  const double rate = detail::get_le<double>(is, "rate");
  if (width == 0 || height == 0) throw FormatError("depth sequence: zero image size");
  if (count == 0) throw ValidationError("depth sequence: frame count is 0");

  const CameraCalibration cal = read_calibration(sidecar_path(path));
  if (calibration) *calibration = cal;

  DepthSequence seq;
  seq.nominal_rate = rate;
  seq.frames.reserve(count);
  const std::size_t pixels = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::vector<unsigned char> raw(pixels * 2);
  for (std::uint32_t k = 0; k < count; ++k) {
    DepthFrame f(width, height, detail::get_le<double>(is, "timestamp"), cal.intrinsics);
    if (!is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
      throw FormatError("depth sequence: truncated frame " + std::to_string(k));
    for (std::size_t i = 0; i < pixels; ++i)
      f.depth_mm[i] = static_cast<float>(static_cast<std::uint16_t>(raw[2 * i] | (raw[2 * i + 1] << 8)));
    seq.frames.push_back(std::move(f));
  }
  seq.validate(false);
  return seq;
}

inline void write_frame_images(const std::filesystem::path& dir, const DepthSequence& seq,
                               const ExtrinsicTransform& extrinsics) {
  seq.validate(false);
  std::filesystem::create_directories(dir);
  nlohmann::json meta = to_json(CameraCalibration{seq.frames.front().intrinsics, extrinsics});
  meta["rate_hz"] = seq.nominal_rate;
  meta["timestamps"] = nlohmann::json::array();
  for (std::size_t k = 0; k < seq.frames.size(); ++k) {
    const auto& f = seq.frames[k];
    meta["timestamps"].push_back(f.timestamp);
    char name[32];
    std::snprintf(name, sizeof name, "frame_%05zu.pgm", k);
    std::ofstream os(dir / name, std::ios::binary);
    os << "P5\n" << f.width << ' ' << f.height << "\n65535\n";
    for (float d : f.depth_mm) {
      const auto v = detail::depth_to_u16(d);
      const unsigned char be[2] = {static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v & 0xff)};
      os.write(reinterpret_cast<const char*>(be), 2);
    }
  }
  std::ofstream js(dir / "sequence.json");
  js << meta.dump(2) << '\n';
}

inline DepthSequence read_frame_images(const std::filesystem::path& dir, CameraCalibration* calibration = nullptr) {
  std::ifstream js(dir / "sequence.json");
  if (!js) throw FormatError("frame images: missing sequence.json in " + dir.string());
  nlohmann::json meta;
  try {
    js >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("frame images: sequence.json: ") + e.what());
  }
  const CameraCalibration cal = calibration_from_json(meta);
  if (calibration) *calibration = cal;
  DepthSequence seq;
  std::vector<double> stamps;
  try {
    seq.nominal_rate = meta.at("rate_hz").get<double>();
    stamps = meta.at("timestamps").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("frame images: sequence.json: ") + e.what());
  }
  if (stamps.empty()) throw ValidationError("frame images: frame count is 0");
  for (std::size_t k = 0; k < stamps.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%05zu.pgm", k);
    std::ifstream is(dir / name, std::ios::binary);
    if (!is) throw FormatError("frame images: missing " + std::string(name));
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    is >> magic >> w >> h >> maxval;
    is.get();
    if (magic != "P5" || w <= 0 || h <= 0 || maxval != 65535)
      throw FormatError("frame images: " + std::string(name) + " is not a 16-bit binary PGM");
    DepthFrame f(w, h, stamps[k], cal.intrinsics);
    std::vector<unsigned char> raw(f.depth_mm.size() * 2);
    if (!is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
      throw FormatError("frame images: truncated " + std::string(name));
    for (std::size_t i = 0; i < f.depth_mm.size(); ++i)
      f.depth_mm[i] = static_cast<float>((raw[2 * i] << 8) | raw[2 * i + 1]);
    seq.frames.push_back(std::move(f));
  }
  seq.validate(false);
  return seq;
}

inline DepthSequence load_depth_sequence(const std::filesystem::path& path, DepthFormat format = DepthFormat::raw_binary,
                                         CameraCalibration* calibration = nullptr) {
  if (!std::filesystem::exists(path)) throw FormatError("depth input not found: " + path.string());
  return format == DepthFormat::raw_binary ? read_dseq(path, calibration) : read_frame_images(path, calibration);
}

}  // namespace rps
