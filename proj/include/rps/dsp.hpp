#pragma once

// Range compression, beamformed radar images, phase displacement and
// Doppler spectrograms from an IF cube.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rps/common.hpp"
#include "rps/fft.hpp"
#include "rps/filters.hpp"
#include "rps/fmcw_sim.hpp"
#include "rps/parallel.hpp"
#include "rps/radar.hpp"

namespace rps {

inline constexpr int taylor_nbar = 4;
inline constexpr double taylor_sidelobe_db = 30.0;

// Range profiles y_m(r, t); layout [m][t][bin].
struct RangeProfiles {
  std::size_t channels = 0;
  std::size_t slow = 0;
  std::size_t bins = 0;
  double bin_spacing = 0.0;  // m
  double slow_rate = 0.0;    // Hz
  double start_time = 0.0;   // s
  std::vector<Complex> data;

  std::size_t index(std::size_t m, std::size_t t, std::size_t b) const { return (m * slow + t) * bins + b; }
  Complex at(std::size_t m, std::size_t t, std::size_t b) const { return data[index(m, t, b)]; }
  double range(std::size_t b) const { return static_cast<double>(b) * bin_spacing; }
  std::span<const Complex> profile(std::size_t m, std::size_t t) const { return {data.data() + index(m, t, 0), bins}; }
};

// Taylor-windowed fast-time DFT. Bin b holds beat frequency b/T_c, i.e. range
// b * c/(2B). Only the first max_bins bins are kept (all when 0).
inline RangeProfiles range_compress(const IFCube& cube, std::size_t max_bins = 0) {
  const std::size_t n = cube.fast;
  RangeProfiles out;
  out.channels = cube.channels;
  out.slow = cube.slow;
  out.bins = max_bins == 0 ? n : std::min(max_bins, n);
  out.bin_spacing = cube.cfg.range_resolution();
  out.slow_rate = cube.cfg.slow_rate;
  out.start_time = cube.start_time;
  out.data.assign(out.channels * out.slow * out.bins, Complex(0.0));

  const auto window = taylor_window(n, taylor_nbar, taylor_sidelobe_db);
  const Fft fft(n);
  parallel_for(
      cube.channels * cube.slow,
      [&](std::size_t mk) {
        const std::size_t m = mk / cube.slow, k = mk % cube.slow;
        std::vector<Complex> in(n), spec(n);
        const auto chirp = cube.chirp(m, k);
        for (std::size_t i = 0; i < n; ++i) in[i] = window[i] * chirp[i];
        fft.forward(in, spec);
        std::copy_n(spec.begin(), out.bins, out.data.begin() + static_cast<std::ptrdiff_t>(out.index(m, k, 0)));
      },
      64);
  return out;
}

struct AngleGrid {
  std::vector<double> azimuth_deg;
  std::vector<double> elevation_deg{0.0};

  static std::vector<double> uniform(double limit_deg, double step_deg) {
    std::vector<double> v;
    const auto n = static_cast<int>(std::floor(limit_deg / step_deg + 1e-9));
    for (int i = -n; i <= n; ++i) v.push_back(i * step_deg);
    return v;
  }

  // 1 degree over +/-60 degrees; elevation only for planar arrays.
  static AngleGrid default_for(const AntennaArray& array, double limit_deg = 60.0, double step_deg = 1.0) {
    AngleGrid g;
    g.azimuth_deg = uniform(limit_deg, step_deg);
    if (array.is_planar()) g.elevation_deg = uniform(limit_deg, step_deg);
    return g;
  }

  void validate() const {
    if (azimuth_deg.empty() || elevation_deg.empty()) throw DomainError("angle grid: empty axis");
    for (double a : azimuth_deg)
      if (!(std::abs(a) <= 90.0)) throw DomainError("angle grid: azimuth outside +/-90 deg");
    for (double e : elevation_deg)
      if (!(std::abs(e) <= 90.0)) throw DomainError("angle grid: elevation outside +/-90 deg");
  }

  static double max_step(const std::vector<double>& axis) {
    double s = 0.0;
    for (std::size_t i = 1; i < axis.size(); ++i) s = std::max(s, std::abs(axis[i] - axis[i - 1]));
    return s;
  }
};

// Far-field steering vector. The round-trip phase to element m is
// 4 pi f R_m / c with R_m ~ |q| - u.p_m, hence exp(-j 2k u.p_m).
inline std::vector<Complex> steering_vector(const AntennaArray& array, double wavenumber, double azimuth_deg,
                                            double elevation_deg) {
  const Vec3 u = unit_direction(deg2rad(azimuth_deg), deg2rad(elevation_deg));
  const Vec3 c = array.centroid();
  std::vector<Complex> a(array.size());
  for (std::size_t m = 0; m < array.size(); ++m)
    a[m] = std::polar(1.0, -2.0 * wavenumber * u.dot(array.position(m) - c));
  return a;
}

// Array taper applied along the dominant axis of the virtual aperture.
inline std::vector<double> array_window(const AntennaArray& array) {
  const std::size_t n = array.size();
  std::vector<double> w(n, 1.0);
  if (array.window() == ArrayWindow::rectangular || n < 2) return w;
  const Vec3 c = array.centroid();
  Vec3 axis = Vec3::Zero();
  for (std::size_t m = 0; m < n; ++m)
    if ((array.position(m) - c).norm() > axis.norm()) axis = array.position(m) - c;
  if (axis.norm() == 0.0) return w;
  std::vector<std::size_t> order(n);
  for (std::size_t m = 0; m < n; ++m) order[m] = m;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return (array.position(a) - c).dot(axis) < (array.position(b) - c).dot(axis);
  });
  const auto taper = taylor_window(n, taylor_nbar, taylor_sidelobe_db);
  for (std::size_t r = 0; r < n; ++r) w[order[r]] = taper[r];
  return w;
}

// Approximate half-power beamwidth of the two-way virtual aperture, degrees.
inline double array_beamwidth_deg(const AntennaArray& array, double wavelength) {
  const Vec3 c = array.centroid();
  double extent = 0.0;
  for (const auto& p : array.virtual_positions())
    for (const auto& q : array.virtual_positions()) extent = std::max(extent, (p - q).norm());
  (void)c;
  if (extent == 0.0) return 180.0;
  const double spacing = extent / static_cast<double>(array.size() - 1);
  const double aperture = 2.0 * (extent + spacing);
  return rad2deg(0.886 * wavelength / aperture);
}

// Beamformed image. Power I_A is stored for every (range, azimuth, elevation)
// cell; the slow-time image I~ is recomputed from the profiles on demand.
struct RadarImage {
  std::shared_ptr<const RangeProfiles> profiles;
  AntennaArray array;
  double wavenumber = 0.0;
  std::vector<double> range_m;
  std::vector<std::size_t> range_bin;  // profile bin behind each range sample
  std::vector<double> azimuth_deg;
  std::vector<double> elevation_deg;
  std::vector<double> power;  // [r][az][el]
  Warnings warnings;

  struct Cell {
    std::size_t range = 0, azimuth = 0, elevation = 0;
  };

  std::size_t index(std::size_t r, std::size_t a, std::size_t e) const {
    return (r * azimuth_deg.size() + a) * elevation_deg.size() + e;
  }
  double at(std::size_t r, std::size_t a, std::size_t e) const { return power[index(r, a, e)]; }

  Cell argmax() const {
    const auto it = std::max_element(power.begin(), power.end());
    auto i = static_cast<std::size_t>(it - power.begin());
    Cell c;
    c.elevation = i % elevation_deg.size();
    i /= elevation_deg.size();
    c.azimuth = i % azimuth_deg.size();
    c.range = i / azimuth_deg.size();
    return c;
  }

  std::vector<Complex> weights(const Cell& c) const {
    const auto a = steering_vector(array, wavenumber, azimuth_deg[c.azimuth], elevation_deg[c.elevation]);
    const auto w = array_window(array);
    std::vector<Complex> v(a.size());
    for (std::size_t m = 0; m < a.size(); ++m) v[m] = w[m] * std::conj(a[m]);
    return v;
  }

  // I(r, theta, phi, t) over slow time, before static removal.
  std::vector<Complex> series(const Cell& c) const {
    const auto v = weights(c);
    std::vector<Complex> out(profiles->slow, Complex(0.0));
    const std::size_t b = range_bin[c.range];
    for (std::size_t m = 0; m < profiles->channels; ++m)
      for (std::size_t t = 0; t < profiles->slow; ++t) out[t] += v[m] * profiles->at(m, t, b);
    return out;
  }

  // I~ = I minus its slow-time mean.
  std::vector<Complex> dynamic(const Cell& c) const {
    auto s = series(c);
    Complex mean = 0.0;
    for (const auto& x : s) mean += x;
    mean /= static_cast<double>(s.size());
    for (auto& x : s) x -= mean;
    return s;
  }
};

struct RangeWindow {
  double min_m = 0.0;
  double max_m = std::numeric_limits<double>::infinity();
};

// I = sum_m w_m a*_m y_m, I~ = I - mean_t I, I_A = mean_t |I~|^2. Per range bin
// the slow-time covariance C of the mean-removed profiles gives
// I_A = v^T C conj(v) with v_m = w_m a*_m.
inline RadarImage beamform(std::shared_ptr<const RangeProfiles> profiles, const AntennaArray& array,
                           const AngleGrid& grid, double wavelength, RangeWindow window = {}) {
  if (!profiles) throw DomainError("beamform: no range profiles");
  if (profiles->channels != array.size()) throw ValidationError("beamform: channel count differs from array size");
  grid.validate();
  if (profiles->slow == 0) throw DomainError("beamform: no slow-time samples");

  RadarImage img;
  img.profiles = profiles;
  img.array = array;
  img.wavenumber = 2.0 * pi / wavelength;
  img.azimuth_deg = grid.azimuth_deg;
  img.elevation_deg = grid.elevation_deg;
  for (std::size_t b = 0; b < profiles->bins; ++b) {
    const double r = profiles->range(b);
    if (r >= window.min_m && r <= window.max_m) {
      img.range_m.push_back(r);
      img.range_bin.push_back(b);
    }
  }
  if (img.range_m.empty()) throw DomainError("beamform: range window selects no bins");

  const double bw = array_beamwidth_deg(array, wavelength);
  const double step = std::max(AngleGrid::max_step(grid.azimuth_deg), AngleGrid::max_step(grid.elevation_deg));
  if (step > bw)
    img.warnings.push_back("angle grid step " + std::to_string(step) + " deg coarser than array beamwidth " +
                           std::to_string(bw) + " deg");

  const std::size_t M = array.size(), T = profiles->slow;
  const std::size_t A = grid.azimuth_deg.size(), E = grid.elevation_deg.size();
  Eigen::MatrixXcd V(M, A * E);
  {
    const auto w = array_window(array);
    for (std::size_t a = 0; a < A; ++a)
      for (std::size_t e = 0; e < E; ++e) {
        const auto s = steering_vector(array, img.wavenumber, grid.azimuth_deg[a], grid.elevation_deg[e]);
        for (std::size_t m = 0; m < M; ++m) V(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(a * E + e)) =
            w[m] * std::conj(s[m]);
      }
  }

  img.power.assign(img.range_m.size() * A * E, 0.0);
  parallel_for(img.range_m.size(), [&](std::size_t ri) {
    const std::size_t b = img.range_bin[ri];
    Eigen::MatrixXcd Y(M, T);
    for (std::size_t m = 0; m < M; ++m)
      for (std::size_t t = 0; t < T; ++t)
        Y(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(t)) = profiles->at(m, t, b);
    Y.colwise() -= Y.rowwise().mean();
    const Eigen::MatrixXcd C = (Y * Y.adjoint()) / static_cast<double>(T);
    // v^T C conj(v) for every grid column.
    const Eigen::MatrixXcd CV = C * V.conjugate();
    for (std::size_t j = 0; j < A * E; ++j) {
      const auto col = static_cast<Eigen::Index>(j);
      const double p = (V.col(col).transpose() * CV.col(col))(0).real();
      img.power[ri * A * E + j] = std::max(p, 0.0);
    }
  });
  return img;
}

struct DisplacementTrace {
  double start_time = 0.0;
  double rate = 0.0;  // Hz
  std::vector<double> d;     // m
  std::vector<double> d_hf;  // m
  double range_m = 0.0;
  double azimuth_deg = 0.0;
  double elevation_deg = 0.0;
  RadarImage::Cell cell;
  Warnings warnings;

  double time(std::size_t k) const { return start_time + static_cast<double>(k) / rate; }
};

// d(t) = lambda/(4 pi) unwrap(arg I~) at the cell of maximum I_A, anchored at
// d(0) = 0; d_HF is its zero-phase 0.05 Hz high-pass.
inline DisplacementTrace extract_displacement(const RadarImage& image, double wavelength) {
  if (image.power.empty()) throw DomainError("extract_displacement: empty image");
  DisplacementTrace out;
  out.rate = image.profiles->slow_rate;
  out.start_time = image.profiles->start_time;
  out.cell = image.argmax();
  out.range_m = image.range_m[out.cell.range];
  out.azimuth_deg = image.azimuth_deg[out.cell.azimuth];
  out.elevation_deg = image.elevation_deg[out.cell.elevation];
  const std::size_t T = image.profiles->slow;

  const auto series = image.series(out.cell);
  Complex mean = 0.0;
  for (const auto& x : series) mean += x;
  mean /= static_cast<double>(T);
  const double dynamic_power = image.at(out.cell.range, out.cell.azimuth, out.cell.elevation);
  const double static_power = std::norm(mean);
  if (!(dynamic_power > 0.0) && !(static_power > 0.0))
    throw DomainError("extract_displacement: image has zero power everywhere");
  if (!(dynamic_power > 1e-20 * static_power)) {
    out.warnings.push_back("no dynamic component at the strongest cell: displacement is identically zero");
    out.d.assign(T, 0.0);
    out.d_hf.assign(T, 0.0);
    return out;
  }

  std::vector<double> phase(T);
  for (std::size_t t = 0; t < T; ++t) phase[t] = std::arg(series[t] - mean);
  const auto ambiguous = unwrap_phase(phase);
  if (ambiguous > 0)
    out.warnings.push_back(std::to_string(ambiguous) +
                           " phase steps near +/-pi between consecutive samples: unwrap may be ambiguous");
  out.d.resize(T);
  const double scale = wavelength / (4.0 * pi);
  for (std::size_t t = 0; t < T; ++t) out.d[t] = scale * (phase[t] - phase[0]);
  out.d_hf = T >= 2 ? respiration_highpass(out.d, out.rate) : out.d;
  return out;
}

struct SpectrogramOptions {
  double target_range = 1.0;  // r*, m
  double gate_half_width = 0.5;  // r0, m
  std::size_t channel = 0;    // m0
  double window_s = 0.5;
  double hop_s = 0.1;
  std::size_t nfft = 256;
  double floor_db = -60.0;
  bool remove_static = true;
};

struct SpectrogramData {
  std::vector<double> times;  // s, window centers
  std::vector<double> freqs;  // Hz, ascending (DC-centered)
  std::vector<double> db;     // [time][freq], relative to the maximum, floor-clamped
  double window_s = 0.5;
  double hop_s = 0.1;
  double floor_db = -60.0;
  double gate_min = 0.0, gate_max = 0.0;  // m
  std::size_t fast_index = 0;             // tau_0
  double peak_power = 0.0;                // linear power behind 0 dB
  Warnings warnings;

  std::size_t frames() const { return times.size(); }
  double at(std::size_t t, std::size_t f) const { return db[t * freqs.size() + f]; }
  double bin_width() const { return freqs.size() > 1 ? freqs[1] - freqs[0] : 0.0; }

  // Frequency of the strongest bin in each frame.
  std::vector<double> ridge() const {
    std::vector<double> r(frames());
    for (std::size_t t = 0; t < frames(); ++t) {
      const auto row = db.begin() + static_cast<std::ptrdiff_t>(t * freqs.size());
      r[t] = freqs[static_cast<std::size_t>(std::max_element(row, row + static_cast<std::ptrdiff_t>(freqs.size())) - row)];
    }
    return r;
  }
};

// X(f, t) = |STFT of x~_{m0}(tau_0, t)|^2 in dB, where x~ is the IF signal
// with its slow-time mean removed and restricted to the range gate by zeroing
// fast-time DFT bins outside [r* - r0, r* + r0]. tau_0 is the fast-time index
// equal to the range bin nearest r*.
inline SpectrogramData spectrogram(const IFCube& cube, const SpectrogramOptions& opt = {}) {
  if (opt.channel >= cube.channels) throw DomainError("spectrogram: channel index out of range");
  const double dr = cube.cfg.range_resolution();
  const std::size_t n = cube.fast;
  const double lo = opt.target_range - opt.gate_half_width, hi = opt.target_range + opt.gate_half_width;
  if (!(opt.gate_half_width >= 0.0) || lo < 0.0 || hi > dr * static_cast<double>(n - 1))
    throw DomainError("spectrogram: range gate outside the range axis");
  const double rate = cube.cfg.slow_rate;
  const auto len = static_cast<std::size_t>(std::lround(opt.window_s * rate));
  const auto hop = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(opt.hop_s * rate)));
  if (len < 2) throw DomainError("spectrogram: window shorter than two samples");
  if (len > cube.slow) throw DomainError("spectrogram: window longer than signal");
  const std::size_t nfft = std::max(opt.nfft, len);

  SpectrogramData out;
  out.window_s = opt.window_s;
  out.hop_s = opt.hop_s;
  out.floor_db = opt.floor_db;
  out.gate_min = lo;
  out.gate_max = hi;
  out.fast_index = std::min(n - 1, static_cast<std::size_t>(std::lround(opt.target_range / dr)));

  // static component per fast-time sample
  std::vector<Complex> mean(n, Complex(0.0));
  if (opt.remove_static) {
    for (std::size_t k = 0; k < cube.slow; ++k) {
      const auto c = cube.chirp(opt.channel, k);
      for (std::size_t i = 0; i < n; ++i) mean[i] += c[i];
    }
    for (auto& x : mean) x /= static_cast<double>(cube.slow);
  }

  // gated slow-time signal at tau_0
  std::vector<Complex> slow(cube.slow);
  const Fft fft(n);
  std::vector<std::size_t> gate;
  for (std::size_t b = 0; b < n; ++b) {
    const double r = static_cast<double>(b) * dr;
    if (r >= lo && r <= hi) gate.push_back(b);
  }
  std::vector<Complex> twiddle(gate.size());
  for (std::size_t g = 0; g < gate.size(); ++g)
    twiddle[g] = std::polar(1.0 / static_cast<double>(n),
                            2.0 * pi * static_cast<double>(gate[g] * out.fast_index % n) / static_cast<double>(n));
  parallel_for(
      cube.slow,
      [&](std::size_t k) {
        std::vector<Complex> in(n), spec(n);
        const auto c = cube.chirp(opt.channel, k);
        for (std::size_t i = 0; i < n; ++i) in[i] = c[i] - mean[i];
        fft.forward(in, spec);
        Complex s = 0.0;
        for (std::size_t g = 0; g < gate.size(); ++g) s += spec[gate[g]] * twiddle[g];
        slow[k] = s;
      },
      256);

  const auto window = taylor_window(len, taylor_nbar, taylor_sidelobe_db);
  const std::size_t frames = (cube.slow - len) / hop + 1;
  out.times.resize(frames);
  out.freqs.resize(nfft);
  for (std::size_t f = 0; f < nfft; ++f)
    out.freqs[f] = (static_cast<double>(f) - static_cast<double>(nfft / 2)) * rate / static_cast<double>(nfft);
  std::vector<double> power(frames * nfft);
  const Fft stft(nfft);
  parallel_for(frames, [&](std::size_t j) {
    std::vector<Complex> in(nfft, Complex(0.0)), spec(nfft);
    const std::size_t start = j * hop;
    for (std::size_t i = 0; i < len; ++i) in[i] = window[i] * slow[start + i];
    stft.forward(in, spec);
    // The STFT phase reference (t' vs t' - t) does not affect |X|^2.
    for (std::size_t f = 0; f < nfft; ++f) power[j * nfft + f] = std::norm(spec[(f + nfft - nfft / 2) % nfft]);
    out.times[j] = cube.slow_time(start) + 0.5 * static_cast<double>(len - 1) / rate;
  });

  const double peak = *std::max_element(power.begin(), power.end());
  out.peak_power = peak;
  out.db.assign(power.size(), opt.floor_db);
  if (!(peak > 0.0)) {
    out.warnings.push_back("spectrogram: no power after static removal and gating");
    return out;
  }
  for (std::size_t i = 0; i < power.size(); ++i)
    out.db[i] = power[i] > 0.0 ? std::max(opt.floor_db, db10(power[i] / peak)) : opt.floor_db;
  return out;
}

// Doppler frequency of a range rate: f_D = (2/lambda) * dR/dt.
inline double doppler_frequency(double range_rate, double wavelength) { return 2.0 * range_rate / wavelength; }

}  // namespace rps
