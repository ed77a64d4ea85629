#include <gtest/gtest.h>

#include "rps/fft.hpp"
#include "rps/fmcw_sim.hpp"
#include "rps/parallel.hpp"
#include "rps/pipeline.hpp"
#include "rps/scene.hpp"
#include "support.hpp"

using namespace rps;
using namespace rps::fixtures;

namespace {

const RadarConfig cfg{};

double max_abs_diff(const IFCube& a, const IFCube& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.samples.size(); ++i) m = std::max(m, std::abs(a.samples[i] - b.samples[i]));
  return m;
}

double max_abs(const IFCube& a) {
  double m = 0.0;
  for (const auto& x : a.samples) m = std::max(m, std::abs(x));
  return m;
}

double mean_power(const std::vector<Complex>& x) {
  double p = 0.0;
  for (const auto& v : x) p += std::norm(v);
  return p / static_cast<double>(x.size());
}

RenderedSequence render_plate(double amplitude, double duration, int pixels = 64) {
  auto s = plate_scene(1.0, 0.3, 0.3, amplitude);
  s.duration = duration;
  s.quantization_mm = 0.0;
  s.camera.width = s.camera.height = pixels;
  s.camera.fov_deg = 30.0;
  return render_sequence(build_scene(s));
}

}  // namespace

TEST(RadarConfig, DerivedQuantities) {
  EXPECT_NEAR(cfg.chirp_rate() * cfg.chirp_duration, cfg.bandwidth, 1e-9 * cfg.bandwidth);
  EXPECT_NEAR(cfg.wavelength() * cfg.center_frequency, cfg.c, 1e-9 * cfg.c);
  EXPECT_NEAR(cfg.range_resolution(), 0.0447, 1e-4);
  RadarConfig bad = cfg;
  bad.bandwidth = -1.0;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = cfg;
  bad.fast_samples = 4;
  EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(AntennaArray, VirtualElementsAreTxRxMidpoints) {
  const auto a = AntennaArray::linear_79ghz();
  ASSERT_EQ(a.size(), 12u);
  EXPECT_LT(a.centroid().norm(), 1e-15);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      EXPECT_TRUE(a.position(i * 4 + j).isApprox(0.5 * (a.tx_positions()[i] + a.rx_positions()[j])));
  // 12 uniformly spaced elements, lambda/4 apart
  std::vector<double> y;
  for (const auto& p : a.virtual_positions()) y.push_back(p.y());
  std::sort(y.begin(), y.end());
  for (std::size_t i = 1; i < y.size(); ++i) EXPECT_NEAR(y[i] - y[i - 1], 0.95e-3, 1e-12);
  EXPECT_EQ(AntennaArray::planar_79ghz().size(), 12u);
  EXPECT_TRUE(AntennaArray::planar_79ghz().is_planar());
  EXPECT_FALSE(a.is_planar());
}

TEST(TrackRanges, StaticPlateMatchesGeometry) {
  const auto rs = render_plate(0.0, 2.0);
  const auto array = AntennaArray::linear_79ghz();
  const auto centers = centers_at({Vec3(1.0, 0.0, 0.0)});
  const auto tracks = track_ranges(centers, rs.sequence, rs.extrinsics, array, cfg, 0.02);
  ASSERT_EQ(tracks.centers, 1u);
  EXPECT_EQ(tracks.samples, 201u);
  for (std::size_t m = 0; m < array.size(); ++m)
    for (std::size_t k = 0; k < tracks.samples; ++k)
      EXPECT_NEAR(tracks.at(m, 0, k), (array.position(m) - Vec3(1, 0, 0)).norm(), 1e-3);
}

TEST(TrackRanges, BreathingPlateAmplitude) {
  const auto rs = render_plate(0.0025, 20.0);
  const auto tracks = track_ranges(centers_at({Vec3(1.0, 0.0, 0.0)}), rs.sequence, rs.extrinsics,
                                   AntennaArray::single_element(), cfg, 0.02);
  const auto track = tracks.track(0, 0);
  const auto [amp, phase] = fit_sinusoid({track.begin(), track.end()}, cfg.slow_rate, 0.25);
  EXPECT_NEAR(amp, 2.5e-3, 0.2e-3);
  EXPECT_TRUE(tracks.warnings.empty());
}

TEST(TrackRanges, OffsetAntennasSeeGeometricRangeDifference) {
  const AntennaArray pair({Vec3::Zero(), Vec3(0, 0.0152, 0)}, {Vec3::Zero()}, {}, {}, ArrayWindow::rectangular);
  ASSERT_NEAR((pair.position(1) - pair.position(0)).norm(), 7.6e-3, 1e-15);
  const auto rs = render_plate(0.0, 1.0);
  const auto tracks = track_ranges(centers_at({Vec3(1.0, 0.0, 0.0)}), rs.sequence, rs.extrinsics, pair, cfg, 0.02);
  const double expected = std::sqrt(1.0 + 7.6e-3 * 7.6e-3) - 1.0;  // 2.888e-5 m
  EXPECT_NEAR(expected, 2.888e-5, 1e-8);
  EXPECT_NEAR(tracks.at(1, 0, 0) - tracks.at(0, 0, 0), expected, 2e-6);
}

TEST(TrackRanges, CenterOffTheSurfaceIsDropped) {
  const auto rs = render_plate(0.0, 1.0);
  const auto tracks = track_ranges(centers_at({Vec3(1.0, 0.0, 0.0), Vec3(1.0, 0.6, 0.0)}), rs.sequence,
                                   rs.extrinsics, AntennaArray::single_element(), cfg, 0.02);
  EXPECT_EQ(tracks.centers, 1u);
  EXPECT_EQ(tracks.center_index, std::vector<std::size_t>{0});
  EXPECT_FALSE(tracks.warnings.empty());
}

TEST(Synthesis, PureToneMatchesAnalyticForm) {
  const auto array = AntennaArray::single_element();
  const auto centers = centers_at({Vec3(2.0, 0.0, 0.0)}, 0.7);
  const auto cube = synthesize_if(static_tracks(centers, array, cfg, 3), centers, array, cfg, std::nullopt, 1);
  const double R = 2.0, f0 = cfg.start_frequency(), gamma = cfg.chirp_rate();
  for (std::size_t i = 0; i < cube.fast; ++i) {
    const double tau = static_cast<double>(i) * cfg.fast_sample_interval();
    const Complex expected = 0.7 * std::polar(1.0, pi) *
                             std::exp(Complex(0, 4.0 * pi * gamma * R * tau / cfg.c + 4.0 * pi * f0 * R / cfg.c));
    EXPECT_LT(std::abs(cube.at(0, i, 1) - expected), 1e-9);
  }
}

TEST(Synthesis, QuarterWavelengthPairCancels) {
  const auto array = AntennaArray::single_element();
  const double dR = cfg.c / (4.0 * cfg.start_frequency());
  const auto centers = centers_at({Vec3(1.0, 0.0, 0.0), Vec3(1.0 + dR, 0.0, 0.0)});
  const auto one = centers_at({Vec3(1.0, 0.0, 0.0)});
  const auto both = synthesize_if(static_tracks(centers, array, cfg, 1), centers, array, cfg, std::nullopt, 1);
  const auto single = synthesize_if(static_tracks(one, array, cfg, 1), one, array, cfg, std::nullopt, 1);
  EXPECT_LT(std::abs(both.at(0, 0, 0)), 1e-9 * std::abs(single.at(0, 0, 0)));
}

TEST(Synthesis, NoiseMeetsRequestedSnr) {
  const auto array = AntennaArray::linear_79ghz();
  const auto centers = centers_at({Vec3(1.0, 0.0, 0.0), Vec3(1.2, 0.2, 0.0)});
  const auto tracks = moving_tracks(centers, array, cfg, 400, sinusoid(2e-3, 0.25));
  const auto clean = synthesize_if(tracks, centers, array, cfg, std::nullopt, 5);
  const auto noisy = synthesize_if(tracks, centers, array, cfg, -20.0, 5);
  std::vector<Complex> noise(clean.samples.size());
  for (std::size_t i = 0; i < noise.size(); ++i) noise[i] = noisy.samples[i] - clean.samples[i];
  EXPECT_NEAR(db10(mean_power(clean.samples) / mean_power(noise)), -20.0, 0.5);
  EXPECT_EQ(noisy.snr_db, std::optional<double>(-20.0));
}

TEST(Synthesis, SuperpositionOfNoiselessCubes) {
  const auto array = AntennaArray::linear_79ghz();
  const auto a = centers_at({Vec3(1.0, 0.1, 0.0), Vec3(1.3, -0.2, 0.1)}, 0.8);
  const auto b = centers_at({Vec3(2.1, 0.0, 0.0)}, 0.3);
  auto u = a;
  u.centers.insert(u.centers.end(), b.centers.begin(), b.centers.end());
  const auto motion = sinusoid(1e-3, 0.3);
  const auto ca = synthesize_if(moving_tracks(a, array, cfg, 50, motion), a, array, cfg, std::nullopt, 1);
  const auto cb = synthesize_if(moving_tracks(b, array, cfg, 50, motion), b, array, cfg, std::nullopt, 1);
  const auto cu = synthesize_if(moving_tracks(u, array, cfg, 50, motion), u, array, cfg, std::nullopt, 1);
  double worst = 0.0;
  for (std::size_t i = 0; i < cu.samples.size(); ++i)
    worst = std::max(worst, std::abs(cu.samples[i] - ca.samples[i] - cb.samples[i]));
  EXPECT_LT(worst, 1e-12 * max_abs(cu));
}

TEST(Synthesis, BeatFrequencyLandsInExpectedBin) {
  const auto array = AntennaArray::single_element();
  const Fft fft(cfg.fast_samples);
  for (double R : {1.0, 2.0, 3.0}) {
    const auto centers = centers_at({Vec3(R, 0.0, 0.0)});
    const auto cube = synthesize_if(static_tracks(centers, array, cfg, 1), centers, array, cfg, std::nullopt, 1);
    std::vector<Complex> spec(cube.fast);
    fft.forward(cube.chirp(0, 0), spec);
    std::size_t peak = 0;
    for (std::size_t i = 0; i < spec.size(); ++i)
      if (std::abs(spec[i]) > std::abs(spec[peak])) peak = i;
    const double expected = 2.0 * cfg.chirp_rate() * R / cfg.c * cfg.chirp_duration;  // bins of 1/T_c
    EXPECT_LE(std::abs(static_cast<double>(peak) - expected), 1.0) << "R = " << R;
  }
}

TEST(Synthesis, SlowTimePhaseAdvanceMatchesRangeStep) {
  const auto array = AntennaArray::single_element();
  const auto centers = centers_at({Vec3(1.5, 0.0, 0.0)});
  const double step = 1.7e-4;
  const auto tracks = moving_tracks(centers, array, cfg, 5, [&](std::size_t, double t) { return step * t * cfg.slow_rate; });
  const auto cube = synthesize_if(tracks, centers, array, cfg, std::nullopt, 1);
  const double expected = std::remainder(4.0 * pi * cfg.start_frequency() * step / cfg.c, 2.0 * pi);
  for (std::size_t k = 1; k < 5; ++k) {
    const double got = std::arg(cube.at(0, 0, k) / cube.at(0, 0, k - 1));
    EXPECT_NEAR(std::remainder(got - expected, 2.0 * pi), 0.0, 1e-9);
  }
}

TEST(Synthesis, DeterministicAcrossSeedsAndThreads) {
  const auto array = AntennaArray::linear_79ghz();
  const auto centers = centers_at({Vec3(1.0, 0.0, 0.0)});
  const auto tracks = moving_tracks(centers, array, cfg, 250, sinusoid(2e-3, 0.25));
  set_max_threads(1);
  const auto a = synthesize_if(tracks, centers, array, cfg, -20.0, 42);
  set_max_threads(4);
  const auto b = synthesize_if(tracks, centers, array, cfg, -20.0, 42);
  set_max_threads(0);
  const auto c = synthesize_if(tracks, centers, array, cfg, -20.0, 43);
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_NE(a.samples, c.samples);
}

TEST(Synthesis, RejectsMismatchedTracks) {
  const auto array = AntennaArray::linear_79ghz();
  const auto centers = centers_at({Vec3(1.0, 0.0, 0.0)});
  const auto tracks = static_tracks(centers, AntennaArray::single_element(), cfg, 10);
  EXPECT_THROW(synthesize_if(tracks, centers, array, cfg, std::nullopt, 1), ValidationError);
  auto ok = static_tracks(centers, array, cfg, 10);
  ok.center_index[0] = 3;
  EXPECT_THROW(synthesize_if(ok, centers, array, cfg, std::nullopt, 1), ValidationError);
}

TEST(Baseline, ZeroAmplitudeEqualsStaticSynthesis) {
  const auto array = AntennaArray::linear_79ghz();
  BaselineModel model;
  model.amplitude = 0.0;
  model.torso_centers = centers_at({Vec3(1.0, 0.0, 0.0), Vec3(1.05, 0.05, 0.1)});
  const auto base = synthesize_baseline(model, array, cfg, 100, 0.0, std::nullopt, 1);
  const auto ref = synthesize_if(static_tracks(model.torso_centers, array, cfg, 100), model.torso_centers, array, cfg,
                                 std::nullopt, 1);
  EXPECT_EQ(base.samples, ref.samples);
}

TEST(Baseline, FiveMillimeterModulationIsRecovered) {
  const auto array = AntennaArray::linear_79ghz();
  BaselineModel model;
  model.amplitude = 0.005;
  model.frequency = 0.25;
  model.torso_centers = centers_at({Vec3(1.0, 0.0, 0.0)});
  const auto cube = synthesize_baseline(model, array, cfg, 3000, 0.0, std::nullopt, 1);
  const auto products = evaluate_cube(cube);
  const auto [amp, phase] = fit_sinusoid(products.displacement.d, cfg.slow_rate, 0.25);
  EXPECT_NEAR(amp, 5e-3, 0.1e-3);
}

TEST(Baseline, ValidationBounds) {
  BaselineModel model;
  model.torso_centers = centers_at({Vec3(1.0, 0.0, 0.0)});
  EXPECT_NO_THROW(model.validate());
  model.frequency = 0.5;
  EXPECT_THROW(model.validate(), ValidationError);
  model.frequency = 0.25;
  model.amplitude = -1e-3;
  EXPECT_THROW(model.validate(), ValidationError);
  model.amplitude = 1e-3;
  model.torso_centers.centers.clear();
  EXPECT_THROW(model.validate(), ValidationError);
}

TEST(Baseline, PhaseFitRecoversKnownPhase) {
  BaselineModel model;
  model.torso_centers = centers_at({Vec3(1.0, 0.0, 0.0)});
  const double rate = 100.0, step = 2.0 * pi / 128.0;
  std::vector<double> ref(3000), cosine(3000);
  for (std::size_t k = 0; k < ref.size(); ++k) {
    const double t = static_cast<double>(k) / rate;
    ref[k] = 0.002 * std::sin(2.0 * pi * 0.25 * t + 1.0);
    cosine[k] = std::cos(2.0 * pi * 0.25 * t);
  }
  EXPECT_NEAR(fit_baseline_phase(model, ref, rate), 1.0, step / 2.0 + 1e-12);
  EXPECT_NEAR(fit_baseline_phase(model, cosine, rate), pi / 2.0, 1e-9);

  std::mt19937_64 rng(11);
  std::normal_distribution<double> noise(0.0, 0.002 / std::sqrt(2.0) / std::sqrt(10.0));  // 10 dB SNR
  for (auto& v : ref) v += noise(rng);
  EXPECT_NEAR(fit_baseline_phase(model, ref, rate), 1.0, 0.1);
  EXPECT_THROW(fit_baseline_phase(model, std::vector<double>(100, 0.0), rate), DomainError);
}

TEST(Baseline, FitFromReferenceKeepsTorsoCentersOnly) {
  const auto centers = centers_at({Vec3(1.0, 0.0, 0.0), Vec3(1.0, 0.45, 0.0), Vec3(1.0, -0.45, 0.0)});
  std::vector<double> ref(6000);
  for (std::size_t k = 0; k < ref.size(); ++k) ref[k] = 0.002 * std::sin(2.0 * pi * 0.3 * k / 100.0 + 0.5);
  const auto model = fit_baseline(centers, ref, 100.0);
  EXPECT_EQ(model.torso_centers.size(), 1u);
  EXPECT_NEAR(model.frequency, 0.3, 1.0 / 60.0);
  EXPECT_NEAR(model.phase, 0.5, 2.0 * pi / 128.0);
  EXPECT_DOUBLE_EQ(model.amplitude, 0.005);
}
