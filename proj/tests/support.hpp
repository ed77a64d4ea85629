#pragma once

// Shared builders for the unit and acceptance tests.

#include <cmath>
#include <functional>
#include <numeric>
#include <utility>
#include <vector>

#include "rps/pipeline.hpp"
#include "rps/scene.hpp"

namespace rps::fixtures {

// One scattering center per position, unit amplitude, opposed phase.
inline ScatteringCenterSet centers_at(const std::vector<Vec3>& positions, double amplitude = 1.0) {
  ScatteringCenterSet set;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    ScatteringCenter c;
    c.position = positions[i];
    c.power = amplitude * amplitude;
    c.amplitude = amplitude;
    c.phase_term = opposed_phase;
    c.vertex = i;
    set.centers.push_back(c);
  }
  set.max_power = amplitude * amplitude;
  return set;
}

// Tracks R = |p_m - q_n| + offset(n, t) on the radar slow-time grid.
inline RangeTrackSet moving_tracks(const ScatteringCenterSet& centers, const AntennaArray& array,
                                   const RadarConfig& cfg, std::size_t samples,
                                   const std::function<double(std::size_t, double)>& offset) {
  RangeTrackSet tracks(array.size(), centers.size(), samples, cfg.slow_rate);
  for (std::size_t m = 0; m < array.size(); ++m)
    for (std::size_t n = 0; n < centers.size(); ++n) {
      const double r0 = (array.position(m) - centers.centers[n].position).norm();
      for (std::size_t k = 0; k < samples; ++k) tracks.at(m, n, k) = r0 + offset(n, tracks.time(k));
    }
  return tracks;
}

inline RangeTrackSet static_tracks(const ScatteringCenterSet& centers, const AntennaArray& array,
                                   const RadarConfig& cfg, std::size_t samples) {
  return moving_tracks(centers, array, cfg, samples, [](std::size_t, double) { return 0.0; });
}

inline std::function<double(std::size_t, double)> sinusoid(double amplitude, double frequency, double phase = 0.0) {
  return [=](std::size_t, double t) { return amplitude * std::sin(2.0 * pi * frequency * t + phase); };
}

// Amplitude and phase of the least-squares fit a*sin(2 pi f t + phi) + c.
inline std::pair<double, double> fit_sinusoid(const std::vector<double>& y, double rate, double frequency,
                                              double t0 = 0.0) {
  const double n = static_cast<double>(y.size());
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double s = 0.0, c = 0.0, ss = 0.0, cc = 0.0, sc = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double w = 2.0 * pi * frequency * (t0 + static_cast<double>(k) / rate);
    const double v = y[k] - mean;
    s += v * std::sin(w);
    c += v * std::cos(w);
    ss += std::sin(w) * std::sin(w);
    cc += std::cos(w) * std::cos(w);
    sc += std::sin(w) * std::cos(w);
  }
  const double det = ss * cc - sc * sc;
  const double a = (s * cc - c * sc) / det;  // sin coefficient
  const double b = (c * ss - s * sc) / det;  // cos coefficient
  return {std::hypot(a, b), std::atan2(b, a)};
}

inline double rms(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

// Deterministic irregular breathing record: rate wandering around 0.25 Hz,
// slowly varying depth and a second harmonic that sharpens exhalation.
inline std::pair<std::vector<double>, std::vector<double>> irregular_breathing(double duration = 65.0,
                                                                               double step = 0.05,
                                                                               double amplitude = 0.0025) {
  std::vector<double> t, d;
  double phase = 0.0;
  const auto n = static_cast<std::size_t>(std::ceil(duration / step));
  for (std::size_t i = 0; i <= n; ++i) {
    const double ti = static_cast<double>(i) * step;
    const double f = 0.25 + 0.05 * std::sin(2.0 * pi * ti / 23.0);
    if (i > 0) phase += 2.0 * pi * f * step;
    const double a = amplitude * (1.0 + 0.3 * std::sin(2.0 * pi * ti / 17.0));
    t.push_back(ti);
    d.push_back(a * (std::sin(phase) + 0.35 * std::sin(2.0 * phase + 0.5)) / 1.2);
  }
  return {t, d};
}

inline SceneConfig irregular_torso_scene(double duration = 60.0) {
  auto cfg = torso_scene();
  cfg.duration = duration;
  auto [t, d] = irregular_breathing(duration + 5.0);
  auto& b = cfg.parts[0].breathing;
  b.waveform = Breathing::Waveform::trace;
  b.trace_t = std::move(t);
  b.trace_d = std::move(d);
  return cfg;
}

// Uniform-grid ground truth of one part on the displacement time axis.
inline std::vector<double> truth_on(const RenderedSequence& rs, std::size_t part, const DisplacementTrace& d) {
  return resample_truth(rs.truth.times, rs.truth.line_of_sight[part], d.start_time, d.rate, d.d.size());
}

// Closed UV sphere with outward normals.
inline SurfaceMesh uv_sphere(const Vec3& center, double radius, int rings = 24, int segments = 48) {
  SurfaceMesh mesh;
  mesh.camera_origin = Vec3::Zero();
  mesh.vertices.push_back(center + Vec3(0, 0, radius));
  for (int i = 1; i < rings; ++i) {
    const double theta = pi * i / rings;
    for (int j = 0; j < segments; ++j) {
      const double phi = 2.0 * pi * j / segments;
      mesh.vertices.push_back(center + radius * Vec3(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
                                                     std::cos(theta)));
    }
  }
  mesh.vertices.push_back(center - Vec3(0, 0, radius));
  const auto south = static_cast<std::uint32_t>(mesh.vertices.size() - 1);
  auto ring = [&](int i, int j) { return static_cast<std::uint32_t>(1 + (i - 1) * segments + (j % segments)); };
  auto add = [&](std::uint32_t a, std::uint32_t b, std::uint32_t c) {
    Vec3 n = (mesh.vertices[b] - mesh.vertices[a]).cross(mesh.vertices[c] - mesh.vertices[a]);
    const Vec3 centroid = (mesh.vertices[a] + mesh.vertices[b] + mesh.vertices[c]) / 3.0;
    if (n.dot(centroid - center) < 0.0) {
      std::swap(b, c);
      n = -n;
    }
    mesh.triangles.push_back({a, b, c});
    mesh.facet_areas.push_back(0.5 * n.norm());
    mesh.facet_normals.push_back(n.normalized());
  };
  for (int j = 0; j < segments; ++j) add(0, ring(1, j), ring(1, j + 1));
  for (int i = 1; i + 1 < rings; ++i)
    for (int j = 0; j < segments; ++j) {
      add(ring(i, j), ring(i + 1, j), ring(i + 1, j + 1));
      add(ring(i, j), ring(i + 1, j + 1), ring(i, j + 1));
    }
  for (int j = 0; j < segments; ++j) add(south, ring(rings - 1, j + 1), ring(rings - 1, j));
  for (const auto& v : mesh.vertices) mesh.vertex_normals.push_back((v - center).normalized());
  mesh.vertex_valid.assign(mesh.vertices.size(), 1);
  return mesh;
}

inline Complex green(const RadarConfig& cfg, const Vec3& r) {
  const double R = r.norm();
  return std::exp(Complex(0, -cfg.wavenumber() * R)) / (4.0 * pi * R);
}

inline Eigen::Matrix3cd far_field_dyad(const RadarConfig& cfg, const Vec3& r) {
  const Vec3 u = r.normalized();
  return (Mat3::Identity() - u * u.transpose()).cast<Complex>() * green(cfg, r);
}

// (I + grad grad / k^2) G with the Hessian from central differences.
inline Eigen::Matrix3cd exact_dyad(const RadarConfig& cfg, const Vec3& r) {
  const double h = 1e-6, k = cfg.wavenumber();
  Eigen::Matrix3cd H;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const Vec3 ei = h * Vec3::Unit(i), ej = h * Vec3::Unit(j);
      H(i, j) = (green(cfg, r + ei + ej) - green(cfg, r + ei - ej) - green(cfg, r - ei + ej) +
                 green(cfg, r - ei - ej)) /
                (4.0 * h * h);
    }
  return Eigen::Matrix3cd::Identity() * green(cfg, r) + H / (k * k);
}

// Received E_z written out directly from the incident spherical wave, the
// induced current 2 n x H and the radiation operator `dyad` applied to it.
template <typename Dyad>
Complex field_oracle(const SurfaceMesh& mesh, const AntennaArray& array, const RadarConfig& cfg, Dyad dyad) {
  const double k = cfg.wavenumber();
  const double eta0 = cfg.mu * cfg.c;
  const Vec3 p = array.centroid();
  Complex total = 0.0;
  for (std::size_t f = 0; f < mesh.facet_count(); ++f) {
    const Vec3 q = mesh.facet_centroid(f);
    const Vec3 n = mesh.facet_normals[f];
    if (n.dot(q - p) >= 0.0) continue;
    const Vec3 out = (q - p).normalized();
    const double R = (q - p).norm();
    const Complex e_inc = array.tx_pattern().field_gain(out) * std::exp(Complex(0, -k * R)) / (4.0 * pi * R);
    CVec3 h = (e_inc / eta0) * Vec3(out.cross(Vec3::UnitZ())).cast<Complex>();
    CVec3 current = 2.0 * n.cast<Complex>().cross(h);
    const Complex rx = array.rx_pattern().field_gain(out);
    const Eigen::Matrix3cd G = dyad(p - q);
    total += Complex(0, -cfg.angular_frequency() * cfg.mu) * rx * (G * current)(2) * mesh.facet_areas[f];
  }
  return total;
}

inline Complex field_oracle(const SurfaceMesh& mesh, const AntennaArray& array, const RadarConfig& cfg) {
  return field_oracle(mesh, array, cfg, [&](const Vec3& r) { return far_field_dyad(cfg, r); });
}

}  // namespace rps::fixtures
