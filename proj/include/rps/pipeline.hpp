#pragma once

// End-to-end chains: depth sequence -> scattering centers -> range tracks ->
// IF cube, the sinusoidal baseline, and the evaluation products of a cube.

#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rps/dsp.hpp"
#include "rps/em_scatter.hpp"
#include "rps/filters.hpp"
#include "rps/fmcw_sim.hpp"
#include "rps/geometry.hpp"
#include "rps/metrics.hpp"
#include "rps/radar.hpp"

namespace rps {

struct SimulationOptions {
  RadarConfig radar;
  AntennaArray array = AntennaArray::linear_79ghz();
  double a0 = 0.0;              // kernel radius, m; 0 selects 5 wavelengths
  double threshold_db = -20.0;  // center extraction threshold
  double patch_radius = 0.0;    // m; 0 selects 2 * a0
  double discontinuity_mm = default_discontinuity_mm;
  std::optional<double> snr_db = -20.0;
  std::uint64_t seed = 1;
  Complex eta = opposed_phase;

  double kernel_radius() const { return a0 > 0.0 ? a0 : 5.0 * radar.wavelength(); }
  double tracking_radius() const { return patch_radius > 0.0 ? patch_radius : 2.0 * kernel_radius(); }
};

struct SimulationResult {
  std::shared_ptr<const SurfaceMesh> mean_surface;
  ScatterPowerMap power_map;
  ScatteringCenterSet centers;
  RangeTrackSet tracks;
  IFCube cube;
  Warnings warnings;
};

// Time-averaged surface -> P^S -> centers -> per-frame line-of-sight tracks
// -> IF synthesis.
inline SimulationResult simulate_from_depth(const DepthSequence& seq, const ExtrinsicTransform& extrinsics,
                                            const SimulationOptions& opt) {
  SimulationResult out;
  const auto mean_frame = time_average_depth(seq);
  out.mean_surface = std::make_shared<const SurfaceMesh>(depth_to_mesh(mean_frame, extrinsics, opt.discontinuity_mm));
  out.power_map = scatter_power_map(out.mean_surface, opt.array, opt.radar, opt.kernel_radius());
  out.centers = extract_centers(out.power_map, opt.threshold_db, opt.kernel_radius(), opt.eta);
  out.tracks = track_ranges(out.centers, seq, extrinsics, opt.array, opt.radar, opt.tracking_radius(),
                            opt.discontinuity_mm);
  out.cube = synthesize_if(out.tracks, out.centers, opt.array, opt.radar, opt.snr_db, opt.seed);
  for (const Warnings* w : {&out.power_map.warnings, &out.tracks.warnings, &out.cube.warnings})
    out.warnings.insert(out.warnings.end(), w->begin(), w->end());
  return out;
}

// Centers inside a lateral box around boresight stand in for the manually
// chosen torso centers of the conventional method.
inline ScatteringCenterSet select_torso_centers(const ScatteringCenterSet& centers, double half_width = 0.2) {
  ScatteringCenterSet out;
  out.threshold_db = centers.threshold_db;
  for (const auto& c : centers.centers)
    if (std::abs(c.position.y()) <= half_width) {
      out.centers.push_back(c);
      out.max_power = std::max(out.max_power, c.power);
    }
  return out;
}

// Conventional model fitted to a reference displacement: the respiration
// rate is the in-band periodogram peak of the high-passed reference and the
// phase maximizes the correlation with it. The amplitude stays fixed.
inline BaselineModel fit_baseline(const ScatteringCenterSet& centers, std::span<const double> reference, double rate,
                                  double start_time = 0.0, double amplitude = 0.005, double half_width = 0.2) {
  BaselineModel model;
  model.amplitude = amplitude;
  model.torso_centers = select_torso_centers(centers, half_width);
  model.frequency = respiration_rate(respiration_highpass(reference, rate), rate).frequency;
  model.validate();
  model.phase = fit_baseline_phase(model, reference, rate, start_time);
  return model;
}

struct EvaluationProducts {
  std::shared_ptr<const RangeProfiles> profiles;
  RadarImage image;
  DisplacementTrace displacement;
  SpectrogramData spectrogram;
  Warnings warnings;
};

struct EvaluationOptions {
  EvaluationRegion region;
  double range_margin = 0.3;  // m beyond the region kept in the image
  double angle_limit_deg = 60.0;
  double angle_step_deg = 1.0;
  std::size_t spectrogram_channel = 0;
};

inline EvaluationProducts evaluate_cube(const IFCube& cube, const EvaluationOptions& opt = {}) {
  opt.region.validate();
  EvaluationProducts out;
  const double lambda = cube.cfg.wavelength();
  const double r_hi = opt.region.target_range + opt.region.r0 + opt.range_margin;
  const auto bins = static_cast<std::size_t>(std::ceil(r_hi / cube.cfg.range_resolution())) + 2;
  out.profiles = std::make_shared<const RangeProfiles>(range_compress(cube, bins));
  const double r_lo = std::max(0.0, opt.region.target_range - opt.region.r0 - opt.range_margin);
  out.image = beamform(out.profiles, cube.array,
                       AngleGrid::default_for(cube.array, opt.angle_limit_deg, opt.angle_step_deg), lambda,
                       RangeWindow{r_lo, r_hi});
  out.displacement = extract_displacement(out.image, lambda);
  SpectrogramOptions so;
  so.target_range = opt.region.target_range;
  so.gate_half_width = opt.region.r0;
  so.channel = opt.spectrogram_channel;
  out.spectrogram = spectrogram(cube, so);
  for (const Warnings* w : std::initializer_list<const Warnings*>{&cube.warnings, &out.image.warnings, &out.displacement.warnings, &out.spectrogram.warnings})
    out.warnings.insert(out.warnings.end(), w->begin(), w->end());
  return out;
}

// Scores `b` against the reference products `a`.
inline MetricsReport compare_products(const EvaluationProducts& a, const EvaluationProducts& b,
                                      const EvaluationRegion& region) {
  MetricsReport r;
  r.image = image_correlation(a.image, b.image, region);
  try {
    r.displacement = displacement_metrics(a.displacement.d, b.displacement.d);
    r.displacement_hf = displacement_metrics(a.displacement.d_hf, b.displacement.d_hf);
    r.reference = reference_cross_correlation(a.displacement.d_hf, b.displacement.d_hf, a.displacement.rate);
  } catch (const UndefinedCorrelation& e) {
    r.warnings.push_back(e.what());
  }
  r.spectrogram_rho = spectrogram_correlation(a.spectrogram, b.spectrogram);
  const auto fa = respiration_rate(a.displacement.d_hf, a.displacement.rate);
  const auto fb = respiration_rate(b.displacement.d_hf, b.displacement.rate);
  if (fa.low_confidence) r.warnings.push_back("respiration rate of the first cube is low-confidence");
  if (fb.low_confidence) r.warnings.push_back("respiration rate of the second cube is low-confidence");
  r.respiration_rates = std::make_pair(fa.frequency, fb.frequency);
  const std::pair<double, double> pair{fb.frequency, fa.frequency};
  r.rate_error = rate_errors(std::span(&pair, 1));
  return r;
}

}  // namespace rps
