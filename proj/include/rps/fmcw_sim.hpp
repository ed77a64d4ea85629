#pragma once

// Range tracking of scattering centers through a depth sequence and FMCW IF
// synthesis, for both the geometry-driven model and the sinusoidal baseline.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rps/common.hpp"
#include "rps/em_scatter.hpp"
#include "rps/geometry.hpp"
#include "rps/parallel.hpp"
#include "rps/radar.hpp"

namespace rps {

// Ranges R[m][n][k] from virtual element m to center n at slow-time sample k.
struct RangeTrackSet {
  std::size_t antennas = 0;
  std::size_t centers = 0;
  std::size_t samples = 0;
  double slow_rate = 100.0;    // Hz
  double source_rate = 15.0;   // Hz, depth frame rate
  double start_time = 0.0;     // s, time of sample 0
  std::vector<std::size_t> center_index;  // track n -> index into the originating center set
  std::vector<double> ranges;
  Warnings warnings;

  RangeTrackSet() = default;
  RangeTrackSet(std::size_t m, std::size_t n, std::size_t k, double rate)
      : antennas(m), centers(n), samples(k), slow_rate(rate), ranges(m * n * k, 0.0) {
    center_index.resize(n);
    for (std::size_t i = 0; i < n; ++i) center_index[i] = i;
  }

  double& at(std::size_t m, std::size_t n, std::size_t k) { return ranges[(m * centers + n) * samples + k]; }
  double at(std::size_t m, std::size_t n, std::size_t k) const { return ranges[(m * centers + n) * samples + k]; }
  std::span<const double> track(std::size_t m, std::size_t n) const {
    return {ranges.data() + (m * centers + n) * samples, samples};
  }
  double time(std::size_t k) const { return start_time + static_cast<double>(k) / slow_rate; }
};

// Physiological bound on the excursion of one track.
inline constexpr double max_track_variation = 0.1;  // m

namespace detail {

// Moller-Trumbore; returns the ray parameter of a front or back hit, if any.
inline std::optional<double> ray_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a, const Vec3& b,
                                          const Vec3& c) {
  const Vec3 e1 = b - a, e2 = c - a;
  const Vec3 p = dir.cross(e2);
  const double det = e1.dot(p);
  if (std::abs(det) < 1e-18) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 s = origin - a;
  const double u = s.dot(p) * inv;
  if (u < -1e-12 || u > 1.0 + 1e-12) return std::nullopt;
  const Vec3 q = s.cross(e1);
  const double v = dir.dot(q) * inv;
  if (v < -1e-12 || u + v > 1.0 + 1e-12) return std::nullopt;
  const double t = e2.dot(q) * inv;
  if (t <= 0.0) return std::nullopt;
  return t;
}

inline std::vector<double> linear_resample(std::span<const double> t_src, std::span<const double> y_src,
                                           double t0, double rate, std::size_t n) {
  std::vector<double> out(n);
  std::size_t j = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = t0 + static_cast<double>(k) / rate;
    while (j + 2 < t_src.size() && t_src[j + 1] < t) ++j;
    if (t_src.size() == 1) {
      out[k] = y_src[0];
      continue;
    }
    const double a = std::clamp((t - t_src[j]) / (t_src[j + 1] - t_src[j]), 0.0, 1.0);
    out[k] = (1.0 - a) * y_src[j] + a * y_src[j + 1];
  }
  return out;
}

}  // namespace detail

// Intersection of the line of sight through `center` with the instantaneous
// surface restricted to a patch of radius patch_radius around the center.
inline std::optional<Vec3> line_of_sight_hit(const DepthFrame& frame, const ExtrinsicTransform& extrinsics,
                                             const Vec3& origin, const Vec3& center, double patch_radius,
                                             double discontinuity_mm) {
  const Vec3 cam = extrinsics.apply_inverse(center);
  if (!(cam.z() > 0.0)) return std::nullopt;
  const auto& in = frame.intrinsics;
  const double u = in.fx * cam.x() / cam.z() + in.cx;
  const double v = in.fy * cam.y() / cam.z() + in.cy;
  const double pr = patch_radius * std::max(in.fx, in.fy) / cam.z() + 2.0;
  PixelWindow win{static_cast<int>(std::floor(u - pr)), static_cast<int>(std::floor(v - pr)),
                  static_cast<int>(std::ceil(u + pr)) + 1, static_cast<int>(std::ceil(v + pr)) + 1};
  if (win.u1 <= 0 || win.v1 <= 0 || win.u0 >= frame.width || win.v0 >= frame.height) return std::nullopt;

  SurfaceMesh patch;
  try {
    patch = depth_to_mesh(frame, extrinsics, discontinuity_mm, win);
  } catch (const DomainError&) {
    return std::nullopt;
  }
  const Vec3 dir = (center - origin).normalized();
  std::optional<double> best;
  for (const auto& tri : patch.triangles) {
    const Vec3& a = patch.vertices[tri[0]];
    const Vec3& b = patch.vertices[tri[1]];
    const Vec3& c = patch.vertices[tri[2]];
    if ((a - center).norm() >= patch_radius || (b - center).norm() >= patch_radius ||
        (c - center).norm() >= patch_radius)
      continue;
    if (auto t = detail::ray_triangle(origin, dir, a, b, c); t && (!best || *t < *best)) best = t;
  }
  if (!best) return std::nullopt;
  return Vec3(origin + *best * dir);
}

// Per-frame line-of-sight tracking of each center, linearly resampled to the
// radar slow-time rate. Centers whose ray misses the surface in more than 10%
// of frames are dropped with a warning.
inline RangeTrackSet track_ranges(const ScatteringCenterSet& centers, const DepthSequence& seq,
                                  const ExtrinsicTransform& extrinsics, const AntennaArray& array,
                                  const RadarConfig& cfg, double patch_radius,
                                  double discontinuity_mm = default_discontinuity_mm) {
  seq.validate(false);
  if (!(patch_radius > 0.0)) throw DomainError("track_ranges: patch radius must be positive");
  const std::size_t frames = seq.frames.size();
  const std::size_t M = array.size();
  const Vec3 origin = array.centroid();

  std::vector<double> stamps(frames);
  for (std::size_t f = 0; f < frames; ++f) stamps[f] = seq.frames[f].timestamp;

  // hits[n][f]
  std::vector<std::vector<std::optional<Vec3>>> hits(centers.size(), std::vector<std::optional<Vec3>>(frames));
  parallel_for(frames, [&](std::size_t f) {
    for (std::size_t n = 0; n < centers.size(); ++n)
      hits[n][f] = line_of_sight_hit(seq.frames[f], extrinsics, origin, centers.centers[n].position, patch_radius,
                                     discontinuity_mm);
  });

  Warnings warnings;
  std::vector<std::size_t> kept;
  for (std::size_t n = 0; n < centers.size(); ++n) {
    const auto missed = static_cast<std::size_t>(std::count(hits[n].begin(), hits[n].end(), std::nullopt));
    if (static_cast<double>(missed) > 0.1 * static_cast<double>(frames)) {
      warnings.push_back("center " + std::to_string(n) + " dropped: line of sight missed the surface in " +
                         std::to_string(missed) + " of " + std::to_string(frames) + " frames");
      continue;
    }
    kept.push_back(n);
  }

  const double t0 = seq.start_time();
  const auto samples =
      static_cast<std::size_t>(std::floor(seq.duration() * cfg.slow_rate + 1e-9)) + 1;
  RangeTrackSet out(M, kept.size(), samples, cfg.slow_rate);
  out.source_rate = seq.nominal_rate;
  out.start_time = t0;
  out.center_index = kept;

  for (std::size_t j = 0; j < kept.size(); ++j) {
    const auto& h = hits[kept[j]];
    std::vector<double> t_ok;
    std::vector<Vec3> p_ok;
    for (std::size_t f = 0; f < frames; ++f)
      if (h[f]) {
        t_ok.push_back(stamps[f]);
        p_ok.push_back(*h[f]);
      }
    for (std::size_t m = 0; m < M; ++m) {
      std::vector<double> r(p_ok.size());
      for (std::size_t f = 0; f < p_ok.size(); ++f) r[f] = (array.position(m) - p_ok[f]).norm();
      const auto res = detail::linear_resample(t_ok, r, t0, cfg.slow_rate, samples);
      std::copy(res.begin(), res.end(), out.ranges.begin() + static_cast<std::ptrdiff_t>((m * kept.size() + j) * samples));
      const auto [lo, hi] = std::minmax_element(res.begin(), res.end());
      if (m == 0 && *hi - *lo >= max_track_variation)
        warnings.push_back("track " + std::to_string(kept[j]) + " varies by " + std::to_string(*hi - *lo) +
                           " m, above the physiological bound");
    }
  }
  out.warnings = std::move(warnings);
  return out;
}

// Complex IF samples x_m(tau_i, t_k). Memory layout [m][k][i] (fast time
// contiguous).
struct IFCube {
  RadarConfig cfg;
  AntennaArray array;
  std::size_t channels = 0;
  std::size_t fast = 0;
  std::size_t slow = 0;
  double start_time = 0.0;
  std::optional<double> snr_db;
  std::vector<Complex> samples;
  Warnings warnings;

  IFCube() = default;
  IFCube(RadarConfig c, AntennaArray a, std::size_t slow_samples)
      : cfg(c), array(std::move(a)), channels(array.size()), fast(cfg.fast_samples), slow(slow_samples),
        samples(channels * fast * slow, Complex(0.0)) {}

  std::size_t index(std::size_t m, std::size_t k, std::size_t i) const { return (m * slow + k) * fast + i; }
  Complex& at(std::size_t m, std::size_t i, std::size_t k) { return samples[index(m, k, i)]; }
  Complex at(std::size_t m, std::size_t i, std::size_t k) const { return samples[index(m, k, i)]; }
  std::span<Complex> chirp(std::size_t m, std::size_t k) { return {samples.data() + index(m, k, 0), fast}; }
  std::span<const Complex> chirp(std::size_t m, std::size_t k) const { return {samples.data() + index(m, k, 0), fast}; }
  double slow_time(std::size_t k) const { return start_time + static_cast<double>(k) / cfg.slow_rate; }

  void validate() const {
    if (channels != array.size() || fast != cfg.fast_samples || samples.size() != channels * fast * slow)
      throw ValidationError("IF cube: dimensions inconsistent with radar config");
    for (const auto& x : samples)
      if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) throw ValidationError("IF cube: non-finite sample");
  }
};

namespace detail {

// Adds one echo a*exp(j(phase0 + i*step)) over the fast-time grid. The
// rotation is re-anchored every 32 samples to bound round-off drift.
inline void add_tone(std::span<Complex> out, Complex a, double phase0, double step) {
  constexpr std::size_t anchor = 32;
  const Complex rot = std::polar(1.0, step);
  Complex z;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i % anchor == 0) z = a * std::polar(1.0, phase0 + static_cast<double>(i) * step);
    out[i] += z;
    z *= rot;
  }
}

inline constexpr std::size_t noise_block = 100;  // slow-time samples per RNG stream

}  // namespace detail

// x_m(tau, t) = sum_n A_n eta_n exp(j 4 pi gamma R tau / c) exp(j 4 pi f0 R / c)
// plus circular white Gaussian noise at snr_db relative to the mean signal
// power over the whole cube. Deterministic in `seed` for any thread count.
inline IFCube synthesize_if(const RangeTrackSet& tracks, const ScatteringCenterSet& centers,
                            const AntennaArray& array, const RadarConfig& cfg, std::optional<double> snr_db,
                            std::uint64_t seed) {
  cfg.validate();
  if (tracks.antennas != array.size()) throw ValidationError("synthesize_if: track antenna count != array size");
  if (tracks.center_index.size() != tracks.centers) throw ValidationError("synthesize_if: malformed track set");
  for (auto idx : tracks.center_index)
    if (idx >= centers.size()) throw ValidationError("synthesize_if: track refers to a missing scattering center");
  if (std::abs(tracks.slow_rate - cfg.slow_rate) > 1e-9 * cfg.slow_rate)
    throw ValidationError("synthesize_if: track rate differs from radar slow rate");

  IFCube cube(cfg, array, tracks.samples);
  cube.start_time = tracks.start_time;
  cube.snr_db = snr_db;
  if (tracks.centers == 0) cube.warnings.push_back("empty scattering-center set: cube holds noise only");

  const double f0 = cfg.start_frequency();
  const double dtau = cfg.fast_sample_interval();
  const std::size_t M = cube.channels, K = cube.slow, N = cube.fast;

  std::vector<double> block_power(M * K, 0.0);
  parallel_for(
      M * K,
      [&](std::size_t mk) {
        const std::size_t m = mk / K, k = mk % K;
        auto out = cube.chirp(m, k);
        for (std::size_t n = 0; n < tracks.centers; ++n) {
          const double R = tracks.at(m, n, k);
          const Complex a = centers.centers[tracks.center_index[n]].complex_amplitude();
          const double phase0 = std::fmod(4.0 * pi * f0 * R / cfg.c, 2.0 * pi);
          const double step = 2.0 * pi * cfg.beat_frequency(R) * dtau;
          detail::add_tone(out, a, phase0, step);
        }
        double p = 0.0;
        for (const auto& x : out) p += std::norm(x);
        block_power[mk] = p;
      },
      64);

  if (!snr_db) return cube;

  double total = 0.0;
  for (double p : block_power) total += p;
  double signal_power = total / static_cast<double>(cube.samples.size());
  if (!(signal_power > 0.0)) signal_power = 1.0;
  const double sigma = std::sqrt(signal_power / from_db10(*snr_db) / 2.0);

  const std::size_t blocks = (K + detail::noise_block - 1) / detail::noise_block;
  parallel_for(M * blocks, [&](std::size_t mb) {
    const std::size_t m = mb / blocks, b = mb % blocks;
    std::seed_seq sseq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                       static_cast<std::uint32_t>(m), static_cast<std::uint32_t>(b)};
    std::mt19937_64 rng(sseq);
    std::normal_distribution<double> gauss(0.0, sigma);
    const std::size_t k_end = std::min(K, (b + 1) * detail::noise_block);
    for (std::size_t k = b * detail::noise_block; k < k_end; ++k)
      for (auto& x : cube.chirp(m, k)) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        x += Complex(re, im);
      }
  });
  (void)N;
  return cube;
}

// Conventional model: sinusoidal range modulation applied to a fixed set of
// torso scattering centers.
struct BaselineModel {
  double amplitude = 0.005;   // m
  double frequency = 0.25;    // Hz
  double phase = 0.0;         // rad
  ScatteringCenterSet torso_centers;

  void validate() const {
    if (!(amplitude >= 0.0)) throw ValidationError("baseline: amplitude must be non-negative");
    if (frequency < 0.15 || frequency > 0.4)
      throw ValidationError("baseline: respiration frequency " + std::to_string(frequency) +
                            " Hz outside [0.15, 0.4] Hz");
    if (torso_centers.empty()) throw ValidationError("baseline: no torso scattering centers");
  }

  double displacement(double t) const { return amplitude * std::sin(2.0 * pi * frequency * t + phase); }
};

inline RangeTrackSet baseline_tracks(const BaselineModel& model, const AntennaArray& array, const RadarConfig& cfg,
                                     std::size_t slow_samples, double start_time = 0.0) {
  model.validate();
  RangeTrackSet tracks(array.size(), model.torso_centers.size(), slow_samples, cfg.slow_rate);
  tracks.start_time = start_time;
  for (std::size_t m = 0; m < array.size(); ++m)
    for (std::size_t n = 0; n < model.torso_centers.size(); ++n) {
      const double r0 = (array.position(m) - model.torso_centers.centers[n].position).norm();
      for (std::size_t k = 0; k < slow_samples; ++k) tracks.at(m, n, k) = model.displacement(tracks.time(k)) + r0;
    }
  return tracks;
}

inline IFCube synthesize_baseline(const BaselineModel& model, const AntennaArray& array, const RadarConfig& cfg,
                                  std::size_t slow_samples, double start_time, std::optional<double> snr_db,
                                  std::uint64_t seed) {
  return synthesize_if(baseline_tracks(model, array, cfg, slow_samples, start_time), model.torso_centers, array,
                       cfg, snr_db, seed);
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

// Phase on a uniform grid of `steps` values in [0, 2pi) maximizing the Pearson
// correlation between the baseline sinusoid and the reference displacement.
inline double fit_baseline_phase(const BaselineModel& model, std::span<const double> reference, double rate,
                                 double start_time = 0.0, std::size_t steps = 128) {
  if (!(rate > 0.0) || steps == 0) throw DomainError("fit_baseline_phase: rate and grid size must be positive");
  if (!(model.frequency > 0.0)) throw DomainError("fit_baseline_phase: frequency must be positive");
  const double span_s = static_cast<double>(reference.size()) / rate;
  if (span_s < 1.0 / model.frequency)
    throw DomainError("fit_baseline_phase: reference shorter than one respiration period");
  std::vector<double> candidate(reference.size());
  double best_phase = 0.0, best_rho = -2.0;
  BaselineModel trial = model;
  for (std::size_t s = 0; s < steps; ++s) {
    trial.phase = 2.0 * pi * static_cast<double>(s) / static_cast<double>(steps);
    for (std::size_t k = 0; k < reference.size(); ++k)
      candidate[k] = trial.displacement(start_time + static_cast<double>(k) / rate);
    const double rho = pearson(candidate, reference);
    if (rho > best_rho) {
      best_rho = rho;
      best_phase = trial.phase;
    }
  }
  return best_phase;
}

}  // namespace rps
