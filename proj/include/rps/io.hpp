#pragma once

// IF cube file format and CSV exports.
//
// IF cube (".ifcb"), little-endian:
//   "IFCB" | M u32 | fast u32 | slow u32 | header length u32 | header JSON
//   then M*fast*slow pairs of f32 (re, im), slow time varying fastest.
// The JSON header carries the radar config, the antenna array, the SNR and
// the slow-time origin, so a cube file is self-contained.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rps/dsp.hpp"
#include "rps/em_scatter.hpp"
#include "rps/fmcw_sim.hpp"
#include "rps/geometry_io.hpp"
#include "rps/metrics.hpp"
#include "rps/radar.hpp"
#include "rps/scene.hpp"

namespace rps {

inline nlohmann::json to_json(const RadarConfig& c) {
  return {{"center_frequency_hz", c.center_frequency}, {"bandwidth_hz", c.bandwidth},
          {"chirp_duration_s", c.chirp_duration},      {"slow_rate_hz", c.slow_rate},
          {"fast_samples", c.fast_samples},             {"speed_of_light", c.c},
          {"permeability", c.mu}};
}

inline RadarConfig radar_config_from_json(const nlohmann::json& j) {
  RadarConfig c;
  try {
    c.center_frequency = j.value("center_frequency_hz", c.center_frequency);
    c.bandwidth = j.value("bandwidth_hz", c.bandwidth);
    c.chirp_duration = j.value("chirp_duration_s", c.chirp_duration);
    c.slow_rate = j.value("slow_rate_hz", c.slow_rate);
    c.fast_samples = j.value("fast_samples", c.fast_samples);
    c.c = j.value("speed_of_light", c.c);
    c.mu = j.value("permeability", c.mu);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("radar config JSON: ") + e.what());
  }
  c.validate();
  return c;
}

namespace detail {

inline nlohmann::json points_json(const std::vector<Vec3>& pts) {
  auto a = nlohmann::json::array();
  for (const auto& p : pts) a.push_back({p.x(), p.y(), p.z()});
  return a;
}

inline std::vector<Vec3> points_from(const nlohmann::json& j) {
  std::vector<Vec3> out;
  for (const auto& p : j) out.emplace_back(p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>());
  return out;
}

inline nlohmann::json pattern_json(const DirectivityPattern& p) {
  return {{"azimuth_half_beamwidth_deg", p.azimuth_half_beamwidth_deg},
          {"elevation_half_beamwidth_deg", p.elevation_half_beamwidth_deg}};
}

inline DirectivityPattern pattern_from(const nlohmann::json& j) {
  return {j.at("azimuth_half_beamwidth_deg").get<double>(), j.at("elevation_half_beamwidth_deg").get<double>()};
}

}  // namespace detail

inline nlohmann::json to_json(const AntennaArray& a) {
  return {{"tx", detail::points_json(a.tx_positions())},
          {"rx", detail::points_json(a.rx_positions())},
          {"tx_pattern", detail::pattern_json(a.tx_pattern())},
          {"rx_pattern", detail::pattern_json(a.rx_pattern())},
          {"window", a.window() == ArrayWindow::taylor ? "taylor" : "rectangular"}};
}

// Accepts either a preset name ("linear", "planar") or a full description.
inline AntennaArray antenna_array_from_json(const nlohmann::json& j) {
  try {
    if (j.is_string()) {
      const auto s = j.get<std::string>();
      if (s == "linear") return AntennaArray::linear_79ghz();
      if (s == "planar") return AntennaArray::planar_79ghz();
      throw ValidationError("unknown antenna array preset '" + s + "'");
    }
    const auto w = j.value("window", std::string("taylor"));
    if (w != "taylor" && w != "rectangular") throw ValidationError("unknown array window '" + w + "'");
    return AntennaArray(detail::points_from(j.at("tx")), detail::points_from(j.at("rx")),
                        detail::pattern_from(j.at("tx_pattern")), detail::pattern_from(j.at("rx_pattern")),
                        w == "taylor" ? ArrayWindow::taylor : ArrayWindow::rectangular);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("antenna array JSON: ") + e.what());
  }
}

inline nlohmann::json to_json(const EvaluationRegion& r) {
  return {{"target_range_m", r.target_range},
          {"r0_m", r.r0},
          {"azimuth_limit_deg", r.azimuth_limit_deg},
          {"elevation_limit_deg", r.elevation_limit_deg}};
}

inline EvaluationRegion region_from_json(const nlohmann::json& j) {
  EvaluationRegion r;
  try {
    r.target_range = j.value("target_range_m", r.target_range);
    r.r0 = j.value("r0_m", r.r0);
    r.azimuth_limit_deg = j.value("azimuth_limit_deg", r.azimuth_limit_deg);
    r.elevation_limit_deg = j.value("elevation_limit_deg", r.elevation_limit_deg);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("evaluation region JSON: ") + e.what());
  }
  r.validate();
  return r;
}

inline void write_ifcb(const std::filesystem::path& path, const IFCube& cube) {
  nlohmann::json header = {{"radar", to_json(cube.cfg)},
                           {"array", to_json(cube.array)},
                           {"snr_db", cube.snr_db ? nlohmann::json(*cube.snr_db) : nlohmann::json(nullptr)},
                           {"start_time_s", cube.start_time}};
  const std::string blob = header.dump();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot create " + path.string());
  os.write("IFCB", 4);
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(cube.channels));
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(cube.fast));
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(cube.slow));
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(blob.size()));
  os.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  std::vector<float> row(2 * cube.slow);
  for (std::size_t m = 0; m < cube.channels; ++m)
    for (std::size_t i = 0; i < cube.fast; ++i) {
      for (std::size_t k = 0; k < cube.slow; ++k) {
        const Complex x = cube.samples[cube.index(m, k, i)];
        row[2 * k] = static_cast<float>(x.real());
        row[2 * k + 1] = static_cast<float>(x.imag());
      }
      if constexpr (std::endian::native == std::endian::little)
        os.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
      else
        for (float v : row) detail::put_le<float>(os, v);
    }
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

inline IFCube read_ifcb(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open IF cube " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "IFCB", 4) != 0) throw FormatError("IF cube: bad magic");
  const auto M = detail::get_le<std::uint32_t>(is, "channel count");
  const auto fast = detail::get_le<std::uint32_t>(is, "fast-time size");
  const auto slow = detail::get_le<std::uint32_t>(is, "slow-time size");
  const auto len = detail::get_le<std::uint32_t>(is, "header length");
  std::string blob(len, '\0');
  if (!is.read(blob.data(), len)) throw FormatError("IF cube: truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(blob);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("IF cube header: ") + e.what());
  }
  const RadarConfig cfg = radar_config_from_json(header.at("radar"));
  AntennaArray array = antenna_array_from_json(header.at("array"));
  if (array.size() != M || cfg.fast_samples != fast)
    throw FormatError("IF cube: dimensions disagree with the embedded radar/array description");
  IFCube cube(cfg, std::move(array), slow);
  cube.start_time = header.value("start_time_s", 0.0);
  if (header.contains("snr_db") && !header.at("snr_db").is_null()) cube.snr_db = header.at("snr_db").get<double>();
  std::vector<float> row(2 * static_cast<std::size_t>(slow));
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t i = 0; i < fast; ++i) {
      if (!is.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float))))
        throw FormatError("IF cube: truncated sample data");
      if constexpr (std::endian::native == std::endian::big)
        for (auto& v : row) {
          auto* b = reinterpret_cast<unsigned char*>(&v);
          std::reverse(b, b + sizeof(float));
        }
      for (std::size_t k = 0; k < slow; ++k) cube.samples[cube.index(m, k, i)] = {row[2 * k], row[2 * k + 1]};
    }
  return cube;
}

// ---- CSV exports ----------------------------------------------------------

namespace detail {
inline std::ofstream open_csv(const std::filesystem::path& path, const char* header) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot create " + path.string());
  os << std::setprecision(10) << header << '\n';
  return os;
}
}  // namespace detail

inline void write_image_csv(const std::filesystem::path& path, const RadarImage& img) {
  auto os = detail::open_csv(path, "range_m,azimuth_deg,elevation_deg,power_db");
  double peak = 0.0;
  for (double p : img.power) peak = std::max(peak, p);
  for (std::size_t r = 0; r < img.range_m.size(); ++r)
    for (std::size_t a = 0; a < img.azimuth_deg.size(); ++a)
      for (std::size_t e = 0; e < img.elevation_deg.size(); ++e) {
        const double p = img.at(r, a, e);
        const double db = (peak > 0.0 && p > 0.0) ? db10(p / peak) : -300.0;
        os << img.range_m[r] << ',' << img.azimuth_deg[a] << ',' << img.elevation_deg[e] << ',' << db << '\n';
      }
}

inline void write_displacement_csv(const std::filesystem::path& path, const DisplacementTrace& d) {
  auto os = detail::open_csv(path, "t_s,d_m,d_hf_m");
  for (std::size_t k = 0; k < d.d.size(); ++k) os << d.time(k) << ',' << d.d[k] << ',' << d.d_hf[k] << '\n';
}

inline void write_spectrogram_csv(const std::filesystem::path& path, const SpectrogramData& s) {
  auto os = detail::open_csv(path, "t_s,f_hz,x_db");
  for (std::size_t t = 0; t < s.times.size(); ++t)
    for (std::size_t f = 0; f < s.freqs.size(); ++f) os << s.times[t] << ',' << s.freqs[f] << ',' << s.at(t, f) << '\n';
}

inline void write_centers_csv(const std::filesystem::path& path, const ScatteringCenterSet& set) {
  auto os = detail::open_csv(path, "index,x_m,y_m,z_m,power,power_db,amplitude,vertex");
  for (std::size_t n = 0; n < set.centers.size(); ++n) {
    const auto& c = set.centers[n];
    const double db = set.max_power > 0.0 ? db10(c.power / set.max_power) : 0.0;
    os << n << ',' << c.position.x() << ',' << c.position.y() << ',' << c.position.z() << ',' << c.power << ','
       << db << ',' << c.amplitude << ',' << c.vertex << '\n';
  }
}

inline ScatteringCenterSet read_centers_csv(const std::filesystem::path& path, Complex eta = opposed_phase) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open centers file " + path.string());
  ScatteringCenterSet set;
  std::string line;
  std::getline(is, line);
  while (std::getline(is, line)) {
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    std::size_t idx, vertex;
    double x, y, z, p, db, a;
    if (!(ls >> idx >> x >> y >> z >> p >> db >> a >> vertex)) throw FormatError("centers file: malformed row");
    set.centers.push_back({Vec3(x, y, z), p, a, eta, vertex});
    set.max_power = std::max(set.max_power, p);
  }
  return set;
}

inline void write_ground_truth_csv(const std::filesystem::path& path, const GroundTruth& gt) {
  auto os = detail::open_csv(path, "t_s,part_id,displacement_m,normal_displacement_m");
  for (std::size_t k = 0; k < gt.times.size(); ++k)
    for (std::size_t p = 0; p < gt.part_names.size(); ++p)
      os << gt.times[k] << ',' << p << ',' << gt.line_of_sight[p][k] << ',' << gt.normal_displacement[p][k] << '\n';
}

struct GroundTruthTable {
  std::vector<double> times;
  std::vector<std::vector<double>> line_of_sight;  // [part][frame]
  std::vector<std::vector<double>> normal;
};

inline GroundTruthTable read_ground_truth_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open ground truth " + path.string());
  GroundTruthTable g;
  std::string line;
  std::getline(is, line);
  while (std::getline(is, line)) {
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double t, los, nd;
    std::size_t part;
    if (!(ls >> t >> part >> los >> nd)) throw FormatError("ground truth: malformed row");
    if (part >= g.line_of_sight.size()) {
      g.line_of_sight.resize(part + 1);
      g.normal.resize(part + 1);
    }
    if (part == 0) g.times.push_back(t);
    g.line_of_sight[part].push_back(los);
    g.normal[part].push_back(nd);
  }
  return g;
}

inline void write_tracks_csv(const std::filesystem::path& path, const RangeTrackSet& tracks, std::size_t antenna = 0) {
  auto os = detail::open_csv(path, "t_s,center,range_m");
  os << std::setprecision(12);
  for (std::size_t n = 0; n < tracks.centers; ++n)
    for (std::size_t k = 0; k < tracks.samples; ++k)
      os << tracks.time(k) << ',' << tracks.center_index[n] << ',' << tracks.at(antenna, n, k) << '\n';
}

// One channel, one chirp of the IF cube.
inline void write_if_slice_csv(const std::filesystem::path& path, const IFCube& cube, std::size_t channel,
                               std::size_t chirp) {
  auto os = detail::open_csv(path, "fast_index,tau_s,re,im");
  const auto c = cube.chirp(channel, chirp);
  for (std::size_t i = 0; i < cube.fast; ++i)
    os << i << ',' << static_cast<double>(i) * cube.cfg.fast_sample_interval() << ',' << c[i].real() << ','
       << c[i].imag() << '\n';
}

}  // namespace rps
