#pragma once

// Similarity and error scores between simulated and reference products.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "rps/common.hpp"
#include "rps/dsp.hpp"
#include "rps/fft.hpp"

namespace rps {

struct UndefinedCorrelation : DomainError {
  using DomainError::DomainError;
};

// Target evaluation region: r in [r* - r0, r* + r0], azimuth and elevation
// within +/-45 degrees.
struct EvaluationRegion {
  double target_range = 1.0;  // r*, m
  double r0 = 0.5;            // m
  double azimuth_limit_deg = 45.0;
  double elevation_limit_deg = 45.0;

  void validate() const {
    if (!(r0 >= 0.0) || !(target_range > r0))
      throw ValidationError("evaluation region: requires target_range > r0 >= 0");
  }
  bool contains(double r, double az, double el) const {
    return r >= target_range - r0 && r <= target_range + r0 && std::abs(az) <= azimuth_limit_deg &&
           std::abs(el) <= elevation_limit_deg;
  }
};

struct ShiftGrid {
  double max_range_m = 0.2;
  double max_angle_deg = 5.0;
};

struct ImageCorrelation {
  double rho = 0.0;
  int shift_range_bins = 0, shift_azimuth_bins = 0, shift_elevation_bins = 0;
  double shift_range_m = 0.0, shift_azimuth_deg = 0.0, shift_elevation_deg = 0.0;
};

namespace detail {

inline double axis_step(const std::vector<double>& axis) { return axis.size() > 1 ? axis[1] - axis[0] : 0.0; }

inline int max_bins(double limit, const std::vector<double>& axis) {
  const double step = axis_step(axis);
  if (axis.size() < 2 || step <= 0.0) return 0;
  return static_cast<int>(std::floor(limit / step + 1e-9));
}

}  // namespace detail

// max over bin-quantized shifts of
//   sum chi I_A(x) I^_A(x + shift) / (|chi I_A| |chi I^_A(. + shift)|).
// Shifted samples falling outside the axes count as zero.
inline ImageCorrelation image_correlation(const RadarImage& reference, const RadarImage& simulated,
                                          const EvaluationRegion& region, const ShiftGrid& shifts = {}) {
  region.validate();
  if (reference.range_m != simulated.range_m || reference.azimuth_deg != simulated.azimuth_deg ||
      reference.elevation_deg != simulated.elevation_deg)
    throw DomainError("image_correlation: images are not on identical axes");
  const auto R = static_cast<int>(reference.range_m.size());
  const auto A = static_cast<int>(reference.azimuth_deg.size());
  const auto E = static_cast<int>(reference.elevation_deg.size());

  std::vector<std::array<int, 3>> mask;
  double ref_norm2 = 0.0;
  for (int r = 0; r < R; ++r)
    for (int a = 0; a < A; ++a)
      for (int e = 0; e < E; ++e)
        if (region.contains(reference.range_m[r], reference.azimuth_deg[a], reference.elevation_deg[e])) {
          mask.push_back({r, a, e});
          const double v = reference.at(r, a, e);
          ref_norm2 += v * v;
        }
  if (mask.empty()) throw DomainError("image_correlation: evaluation region selects no cells");

  const int sr = detail::max_bins(shifts.max_range_m, reference.range_m);
  const int sa = detail::max_bins(shifts.max_angle_deg, reference.azimuth_deg);
  const int se = detail::max_bins(shifts.max_angle_deg, reference.elevation_deg);

  ImageCorrelation best;
  best.rho = -2.0;
  bool any = false;
  for (int dr = -sr; dr <= sr; ++dr)
    for (int da = -sa; da <= sa; ++da)
      for (int de = -se; de <= se; ++de) {
        double dot = 0.0, sim_norm2 = 0.0;
        for (const auto& [r, a, e] : mask) {
          const int r2 = r + dr, a2 = a + da, e2 = e + de;
          if (r2 < 0 || r2 >= R || a2 < 0 || a2 >= A || e2 < 0 || e2 >= E) continue;
          const double s = simulated.at(r2, a2, e2);
          dot += reference.at(r, a, e) * s;
          sim_norm2 += s * s;
        }
        const double denom = std::sqrt(ref_norm2 * sim_norm2);
        const double rho = denom > 0.0 ? dot / denom : 0.0;
        // ties resolved toward the smallest shift
        const auto size = std::abs(dr) + std::abs(da) + std::abs(de);
        const auto best_size = std::abs(best.shift_range_bins) + std::abs(best.shift_azimuth_bins) +
                               std::abs(best.shift_elevation_bins);
        if (!any || rho > best.rho + 1e-12 || (std::abs(rho - best.rho) <= 1e-12 && size < best_size)) {
          any = true;
          best.rho = rho;
          best.shift_range_bins = dr;
          best.shift_azimuth_bins = da;
          best.shift_elevation_bins = de;
        }
      }
  if (!(ref_norm2 > 0.0)) throw UndefinedCorrelation("image_correlation: reference image is zero on the region");
  best.shift_range_m = best.shift_range_bins * detail::axis_step(reference.range_m);
  best.shift_azimuth_deg = best.shift_azimuth_bins * detail::axis_step(reference.azimuth_deg);
  best.shift_elevation_deg = best.shift_elevation_bins * detail::axis_step(reference.elevation_deg);
  return best;
}

struct DisplacementScore {
  double rho = 0.0;
  double rmse = 0.0;  // m
};

// rho = <d, d^> / (|d| |d^|) (no mean removal unless requested) and the RMS
// difference.
inline DisplacementScore displacement_metrics(std::span<const double> d, std::span<const double> d_hat,
                                              bool remove_mean = false) {
  if (d.size() != d_hat.size()) throw DomainError("displacement_metrics: length mismatch");
  if (d.empty()) throw DomainError("displacement_metrics: empty traces");
  const double n = static_cast<double>(d.size());
  double ma = 0.0, mb = 0.0;
  if (remove_mean) {
    ma = std::accumulate(d.begin(), d.end(), 0.0) / n;
    mb = std::accumulate(d_hat.begin(), d_hat.end(), 0.0) / n;
  }
  double dot = 0.0, na = 0.0, nb = 0.0, err = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double a = d[i] - ma, b = d_hat[i] - mb;
    dot += a * b;
    na += a * a;
    nb += b * b;
    err += (d[i] - d_hat[i]) * (d[i] - d_hat[i]);
  }
  if (!(na > 0.0) || !(nb > 0.0)) throw UndefinedCorrelation("displacement_metrics: zero-norm input");
  return {dot / std::sqrt(na * nb), std::sqrt(err / n)};
}

// Zero-lag correlation of two dB spectrograms on identical axes, normalized by
// the L2 norms (no mean removal).
inline double spectrogram_correlation(const SpectrogramData& x, const SpectrogramData& x_hat) {
  if (x.times.size() != x_hat.times.size() || x.freqs.size() != x_hat.freqs.size())
    throw DomainError("spectrogram_correlation: axis mismatch");
  for (std::size_t i = 0; i < x.times.size(); ++i)
    if (std::abs(x.times[i] - x_hat.times[i]) > 1e-9) throw DomainError("spectrogram_correlation: time axis mismatch");
  for (std::size_t i = 0; i < x.freqs.size(); ++i)
    if (std::abs(x.freqs[i] - x_hat.freqs[i]) > 1e-9)
      throw DomainError("spectrogram_correlation: frequency axis mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < x.db.size(); ++i) {
    dot += x.db[i] * x_hat.db[i];
    na += x.db[i] * x.db[i];
    nb += x_hat.db[i] * x_hat.db[i];
  }
  if (!(na > 0.0) || !(nb > 0.0)) throw UndefinedCorrelation("spectrogram_correlation: zero-norm input");
  return dot / std::sqrt(na * nb);
}

struct LaggedCorrelation {
  double rho = 0.0;
  double lag_s = 0.0;  // positive when the second signal lags the first
};

// max over lags in [-max_lag, max_lag] of the correlation of the overlapping
// parts, each normalized by its own L2 norm over the overlap.
inline LaggedCorrelation reference_cross_correlation(std::span<const double> d, std::span<const double> h,
                                                     double rate, double max_lag_s = 2.0) {
  if (d.size() != h.size()) throw DomainError("reference_cross_correlation: length mismatch");
  if (!(rate > 0.0)) throw DomainError("reference_cross_correlation: rate must be positive");
  const auto n = static_cast<long>(d.size());
  auto max_lag = static_cast<long>(std::floor(max_lag_s * rate + 1e-9));
  if (2 * max_lag > n) throw DomainError("reference_cross_correlation: lag range leaves less than 50% overlap");
  LaggedCorrelation best{-2.0, 0.0};
  bool any = false;
  for (long lag = -max_lag; lag <= max_lag; ++lag) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (long i = std::max(0L, -lag); i < std::min(n, n - lag); ++i) {
      const double a = d[static_cast<std::size_t>(i)], b = h[static_cast<std::size_t>(i + lag)];
      dot += a * b;
      na += a * a;
      nb += b * b;
    }
    if (!(na > 0.0) || !(nb > 0.0)) continue;
    const double rho = dot / std::sqrt(na * nb);
    if (!any || rho > best.rho + 1e-12 || (std::abs(rho - best.rho) <= 1e-12 && std::abs(lag) < std::abs(best.lag_s * rate))) {
      any = true;
      best = {rho, static_cast<double>(lag) / rate};
    }
  }
  if (!any) throw UndefinedCorrelation("reference_cross_correlation: zero-norm input");
  return best;
}

inline constexpr double respiration_band_low = 0.15;   // Hz
inline constexpr double respiration_band_high = 0.4;   // Hz

struct RespirationRate {
  double frequency = 0.0;   // Hz
  double peak_to_median_db = 0.0;
  bool low_confidence = false;
};

// Argmax of the rectangular-window periodogram of the full record within the
// band. A peak less than 3 dB above the in-band median is flagged.
inline RespirationRate respiration_rate(std::span<const double> signal, double rate,
                                        double band_low = respiration_band_low,
                                        double band_high = respiration_band_high) {
  const double duration = static_cast<double>(signal.size()) / rate;
  if (duration < 10.0 - 1e-9) throw DomainError("respiration_rate: record shorter than 10 s");
  const std::size_t n = signal.size();
  std::vector<Complex> in(signal.begin(), signal.end()), spec(n);
  Fft(n).forward(in, spec);
  std::vector<std::pair<double, double>> band;  // (frequency, power)
  for (std::size_t k = 0; k <= n / 2; ++k) {
    const double f = static_cast<double>(k) * rate / static_cast<double>(n);
    if (f >= band_low - 1e-12 && f <= band_high + 1e-12) band.emplace_back(f, std::norm(spec[k]));
  }
  if (band.empty()) throw DomainError("respiration_rate: no spectral bins inside the band");
  const auto peak = *std::max_element(band.begin(), band.end(),
                                      [](const auto& a, const auto& b) { return a.second < b.second; });
  std::vector<double> p;
  for (const auto& [f, v] : band) p.push_back(v);
  std::nth_element(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(p.size() / 2), p.end());
  const double median = p[p.size() / 2];
  RespirationRate out;
  out.frequency = peak.first;
  out.peak_to_median_db = median > 0.0 ? db10(peak.second / median) : (peak.second > 0.0 ? 300.0 : 0.0);
  out.low_confidence = out.peak_to_median_db < 3.0;
  return out;
}

struct RateErrors {
  double rms = 0.0;       // Hz
  double relative = 0.0;  // mean |f - f^| / f
};

// Pairs are (estimate, reference).
inline RateErrors rate_errors(std::span<const std::pair<double, double>> pairs) {
  if (pairs.empty()) throw DomainError("rate_errors: no pairs");
  double sq = 0.0, rel = 0.0;
  for (const auto& [est, ref] : pairs) {
    if (!(ref > 0.0)) throw DomainError("rate_errors: reference rate must be positive");
    sq += (est - ref) * (est - ref);
    rel += std::abs(est - ref) / ref;
  }
  const double n = static_cast<double>(pairs.size());
  return {std::sqrt(sq / n), rel / n};
}

struct MetricsReport {
  std::optional<ImageCorrelation> image;
  std::optional<DisplacementScore> displacement;
  std::optional<DisplacementScore> displacement_hf;
  std::optional<double> spectrogram_rho;
  std::optional<LaggedCorrelation> reference;
  std::optional<std::pair<double, double>> respiration_rates;  // (a, b), Hz
  std::optional<RateErrors> rate_error;
  Warnings warnings;
};

inline nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json j = nlohmann::json::object();
  if (r.image)
    j["image"] = {{"rho_I", r.image->rho},
                  {"shift_range_m", r.image->shift_range_m},
                  {"shift_azimuth_deg", r.image->shift_azimuth_deg},
                  {"shift_elevation_deg", r.image->shift_elevation_deg}};
  if (r.displacement) j["displacement"] = {{"rho_d", r.displacement->rho}, {"eps_d_m", r.displacement->rmse}};
  if (r.displacement_hf)
    j["displacement_hf"] = {{"rho_d", r.displacement_hf->rho}, {"eps_d_m", r.displacement_hf->rmse}};
  if (r.spectrogram_rho) j["spectrogram"] = {{"rho_S", *r.spectrogram_rho}};
  if (r.reference) j["reference"] = {{"rho_T", r.reference->rho}, {"lag_s", r.reference->lag_s}};
  if (r.respiration_rates)
    j["respiration_rate"] = {{"f_a_hz", r.respiration_rates->first}, {"f_b_hz", r.respiration_rates->second}};
  if (r.rate_error) j["rate_error"] = {{"eps_RR_hz", r.rate_error->rms}, {"rel_eps_RR", r.rate_error->relative}};
  j["warnings"] = r.warnings;
  return j;
}

}  // namespace rps
