#pragma once

// Window functions, Butterworth high-pass design and zero-phase filtering.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>
#include <vector>

#include "rps/common.hpp"

namespace rps {

// Taylor window, symmetric, normalized to 1 at the center. Same definition as
// the classic array-processing window with nbar nearly-constant sidelobes at
// sidelobe_db below the main lobe.
inline std::vector<double> taylor_window(std::size_t n, int nbar = 4, double sidelobe_db = 30.0) {
  if (n == 0) return {};
  if (n == 1) return {1.0};
  if (nbar < 1) throw DomainError("taylor_window: nbar must be >= 1");
  const double b = std::pow(10.0, sidelobe_db / 20.0);
  const double a = std::acosh(b) / pi;
  const double s2 = nbar * nbar / (a * a + (nbar - 0.5) * (nbar - 0.5));
  std::vector<double> fm(static_cast<std::size_t>(nbar - 1));
  for (int m = 1; m < nbar; ++m) {
    const double m2 = static_cast<double>(m) * m;
    double numer = (m % 2 == 1) ? 1.0 : -1.0;
    double denom = 2.0;
    for (int i = 1; i < nbar; ++i) {
      numer *= 1.0 - m2 / s2 / (a * a + (i - 0.5) * (i - 0.5));
      if (i != m) denom *= 1.0 - m2 / (static_cast<double>(i) * i);
    }
    fm[static_cast<std::size_t>(m - 1)] = numer / denom;
  }
  const double len = static_cast<double>(n);
  auto eval = [&](double x) {
    double w = 1.0;
    for (int m = 1; m < nbar; ++m)
      w += 2.0 * fm[static_cast<std::size_t>(m - 1)] * std::cos(2.0 * pi * m * (x - len / 2.0 + 0.5) / len);
    return w;
  };
  const double scale = 1.0 / eval((len - 1.0) / 2.0);
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = eval(static_cast<double>(i)) * scale;
  return w;
}

// One biquad in transposed direct form II: b0 b1 b2 / 1 a1 a2.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;

  // State giving a steady-state response to a unit step input.
  std::array<double, 2> step_state() const {
    // (I - A) z = b[1:] - a[1:] b0 with A the transposed companion matrix.
    const double r1 = b1 - a1 * b0, r2 = b2 - a2 * b0;
    const double m00 = 1.0 + a1, m01 = -1.0, m10 = a2, m11 = 1.0;
    const double det = m00 * m11 - m01 * m10;
    return {(r1 * m11 - m01 * r2) / det, (m00 * r2 - m10 * r1) / det};
  }

  double dc_gain() const { return (b0 + b1 + b2) / (1.0 + a1 + a2); }

  Complex response(Complex z) const {
    const Complex zi = 1.0 / z;
    return (b0 + b1 * zi + b2 * zi * zi) / (1.0 + a1 * zi + a2 * zi * zi);
  }
};

using SosFilter = std::vector<Biquad>;

inline Complex frequency_response(const SosFilter& sos, double freq, double fs) {
  const Complex z = std::polar(1.0, 2.0 * pi * freq / fs);
  Complex h = 1.0;
  for (const auto& s : sos) h *= s.response(z);
  return h;
}

// Digital Butterworth high-pass via the bilinear transform with prewarped
// cutoff, returned as second-order sections (odd orders end with a
// first-order section).
inline SosFilter butterworth_highpass(int order, double cutoff_hz, double fs) {
  if (order < 1) throw DomainError("butterworth_highpass: order must be >= 1");
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < fs / 2.0))
    throw DomainError("butterworth_highpass: cutoff must lie in (0, fs/2)");
  const double wc = 2.0 * fs * std::tan(pi * cutoff_hz / fs);
  const double k2 = 2.0 * fs;
  auto to_z = [&](Complex analog_lp_pole) {
    const Complex s = wc / analog_lp_pole;  // low-pass to high-pass
    return (k2 + s) / (k2 - s);
  };
  SosFilter sos;
  for (int k = 0; k < order / 2; ++k) {
    const Complex p = std::polar(1.0, pi * (2.0 * k + order + 1) / (2.0 * order));
    const Complex zp = to_z(p);
    // zeros at z = 1 (double)
    sos.push_back({1.0, -2.0, 1.0, -2.0 * zp.real(), std::norm(zp)});
  }
  if (order % 2 == 1) {
    const Complex zp = to_z(Complex(-1.0, 0.0));
    sos.push_back({1.0, -1.0, 0.0, -zp.real(), 0.0});
  }
  // unit gain at Nyquist
  const double g = std::abs(frequency_response(sos, fs / 2.0, fs));
  sos.front().b0 /= g;
  sos.front().b1 /= g;
  sos.front().b2 /= g;
  return sos;
}

inline std::vector<double> sos_filter(const SosFilter& sos, std::span<const double> x,
                                      std::span<const std::array<double, 2>> initial_state = {}) {
  std::vector<double> y(x.begin(), x.end());
  for (std::size_t s = 0; s < sos.size(); ++s) {
    const auto& q = sos[s];
    double z1 = 0.0, z2 = 0.0;
    if (!initial_state.empty()) {
      z1 = initial_state[s][0];
      z2 = initial_state[s][1];
    }
    for (auto& v : y) {
      const double in = v;
      const double out = q.b0 * in + z1;
      z1 = q.b1 * in - q.a1 * out + z2;
      z2 = q.b2 * in - q.a2 * out;
      v = out;
    }
  }
  return y;
}

// Per-section states for a steady unit step through the cascade.
inline std::vector<std::array<double, 2>> sos_step_state(const SosFilter& sos) {
  std::vector<std::array<double, 2>> zi(sos.size());
  double scale = 1.0;
  for (std::size_t s = 0; s < sos.size(); ++s) {
    const auto z = sos[s].step_state();
    zi[s] = {z[0] * scale, z[1] * scale};
    scale *= sos[s].dc_gain();
  }
  return zi;
}

// Forward-backward filtering with odd extension of padlen samples at both
// ends and steady-state initial conditions, as in the usual filtfilt.
inline std::vector<double> filtfilt(const SosFilter& sos, std::span<const double> x, std::size_t padlen) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  if (padlen >= n) throw DomainError("filtfilt: padlen must be shorter than the signal");
  std::vector<double> ext;
  ext.reserve(n + 2 * padlen);
  for (std::size_t i = padlen; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= padlen; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  const auto zi = sos_step_state(sos);
  auto scaled = [&](double x0) {
    auto z = zi;
    for (auto& s : z) s = {s[0] * x0, s[1] * x0};
    return z;
  };
  auto y = sos_filter(sos, ext, scaled(ext.front()));
  std::reverse(y.begin(), y.end());
  y = sos_filter(sos, y, scaled(y.front()));
  std::reverse(y.begin(), y.end());
  return {y.begin() + static_cast<std::ptrdiff_t>(padlen), y.begin() + static_cast<std::ptrdiff_t>(padlen + n)};
}

inline constexpr int respiration_filter_order = 5;
inline constexpr double respiration_cutoff_hz = 0.05;

// Zero-phase fifth-order Butterworth high-pass at 0.05 Hz. The padding spans
// several time constants of the filter so edge transients stay small.
inline std::vector<double> respiration_highpass(std::span<const double> x, double fs) {
  if (x.size() < 2) throw DomainError("respiration_highpass: need at least two samples");
  const auto sos = butterworth_highpass(respiration_filter_order, respiration_cutoff_hz, fs);
  const auto wanted = static_cast<std::size_t>(std::ceil(10.0 * fs / respiration_cutoff_hz));
  return filtfilt(sos, x, std::min(wanted, x.size() - 1));
}

// Classic phase unwrapping: adds multiples of 2 pi so consecutive samples
// differ by at most pi. Returns the count of steps whose wrapped magnitude
// exceeded ambiguous_step (ambiguous corrections).
inline std::size_t unwrap_phase(std::vector<double>& phase, double ambiguous_step = 0.75 * pi) {
  std::size_t ambiguous = 0;
  double prev_raw = phase.empty() ? 0.0 : phase[0];
  for (std::size_t i = 1; i < phase.size(); ++i) {
    const double raw = phase[i];
    const double step = std::remainder(raw - prev_raw, 2.0 * pi);
    if (std::abs(step) > ambiguous_step) ++ambiguous;
    phase[i] = phase[i - 1] + step;
    prev_raw = raw;
  }
  return ambiguous;
}

}  // namespace rps
