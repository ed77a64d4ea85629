#include <gtest/gtest.h>

#include <random>

#include "rps/metrics.hpp"
#include "rps/pipeline.hpp"
#include "support.hpp"

using namespace rps;
using namespace rps::fixtures;

namespace {

RadarImage grid_image(const std::vector<std::tuple<std::size_t, std::size_t, double>>& spots, std::size_t ranges = 40,
                      std::size_t angles = 61) {
  RadarImage img;
  for (std::size_t r = 0; r < ranges; ++r) img.range_m.push_back(0.6 + 0.05 * static_cast<double>(r));
  for (std::size_t a = 0; a < angles; ++a) img.azimuth_deg.push_back(-30.0 + static_cast<double>(a));
  img.elevation_deg = {0.0};
  img.power.assign(ranges * angles, 0.0);
  for (const auto& [r, a, p] : spots) img.power[r * angles + a] = p;
  return img;
}

std::vector<double> tone(std::size_t n, double rate, double f, double amp = 1.0, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t k = 0; k < n; ++k) x[k] = amp * std::sin(2.0 * pi * f * static_cast<double>(k) / rate + phase);
  return x;
}

const EvaluationRegion region{};

}  // namespace

TEST(ImageCorrelation, SelfCorrelationIsOne) {
  const auto img = grid_image({{8, 30, 1.0}, {10, 25, 0.4}, {9, 33, 0.2}});
  const auto c = image_correlation(img, img, region);
  EXPECT_NEAR(c.rho, 1.0, 1e-12);
  EXPECT_EQ(c.shift_range_bins, 0);
  EXPECT_EQ(c.shift_azimuth_bins, 0);
}

TEST(ImageCorrelation, OneBinShiftIsFound) {
  const auto a = grid_image({{8, 30, 1.0}, {10, 25, 0.4}});
  const auto b = grid_image({{9, 32, 1.0}, {11, 27, 0.4}});
  const auto c = image_correlation(a, b, region);
  EXPECT_NEAR(c.rho, 1.0, 1e-12);
  EXPECT_EQ(c.shift_range_bins, 1);
  EXPECT_EQ(c.shift_azimuth_bins, 2);
  EXPECT_NEAR(c.shift_range_m, 0.05, 1e-12);
  EXPECT_NEAR(c.shift_azimuth_deg, 2.0, 1e-12);
}

TEST(ImageCorrelation, DisjointSupportsGiveZero) {
  const auto a = grid_image({{8, 10, 1.0}});
  const auto b = grid_image({{20, 50, 1.0}});
  EXPECT_EQ(image_correlation(a, b, region).rho, 0.0);
}

TEST(ImageCorrelation, SymmetricAtZeroShiftAndScaleInvariant) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto a = grid_image({}), b = grid_image({});
  for (auto& p : a.power) p = u(rng);
  for (auto& p : b.power) p = u(rng);
  const ShiftGrid none{0.0, 0.0};
  const double ab = image_correlation(a, b, region, none).rho;
  EXPECT_NEAR(ab, image_correlation(b, a, region, none).rho, 1e-12);
  auto b2 = b;
  for (auto& p : b2.power) p *= 37.0;
  EXPECT_NEAR(image_correlation(a, b2, region).rho, image_correlation(a, b, region).rho, 1e-12);
  EXPECT_LE(std::abs(image_correlation(a, b, region).rho), 1.0);
}

TEST(ImageCorrelation, RejectsDifferentAxes) {
  const auto a = grid_image({{8, 30, 1.0}});
  const auto b = grid_image({{8, 30, 1.0}}, 41);
  EXPECT_THROW(image_correlation(a, b, region), DomainError);
  EXPECT_THROW(image_correlation(a, a, EvaluationRegion{0.4, 0.5}), ValidationError);
}

TEST(DisplacementMetrics, IdentitiesAndSigns) {
  const auto d = tone(3000, 100.0, 0.25, 2e-3);
  auto neg = d;
  for (auto& v : neg) v = -v;
  const auto quad = tone(3000, 100.0, 0.25, 2e-3, pi / 2.0);
  const auto self = displacement_metrics(d, d);
  EXPECT_NEAR(self.rho, 1.0, 1e-12);
  EXPECT_EQ(self.rmse, 0.0);
  EXPECT_NEAR(displacement_metrics(d, neg).rho, -1.0, 1e-12);
  EXPECT_NEAR(displacement_metrics(d, neg).rmse, 2.0 * rms(d), 1e-12);
  EXPECT_NEAR(displacement_metrics(d, quad).rho, 0.0, 1e-3);
  auto scaled = d;
  for (auto& v : scaled) v *= 4.2;
  EXPECT_NEAR(displacement_metrics(d, scaled).rho, 1.0, 1e-12);
  EXPECT_THROW(displacement_metrics(d, std::vector<double>(3000, 0.0)), UndefinedCorrelation);
  EXPECT_THROW(displacement_metrics(d, std::vector<double>(10, 1.0)), DomainError);
}

TEST(DisplacementMetrics, NoMeanRemovalByDefault) {
  const auto d = tone(2000, 100.0, 0.25, 1.0);
  auto shifted = d;
  for (auto& v : shifted) v += 1.0;
  EXPECT_LT(displacement_metrics(d, shifted).rho, 0.9);
  EXPECT_NEAR(displacement_metrics(d, shifted, true).rho, 1.0, 1e-12);
}

TEST(DisplacementMetrics, RmseTriangleInequality) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(200), b(200), c(200);
    for (std::size_t i = 0; i < 200; ++i) {
      a[i] = g(rng);
      b[i] = g(rng);
      c[i] = g(rng);
    }
    const double ab = displacement_metrics(a, b).rmse, bc = displacement_metrics(b, c).rmse;
    const double ac = displacement_metrics(a, c).rmse;
    EXPECT_LE(ac, ab + bc + 1e-12);
    const double rho = displacement_metrics(a, b).rho;
    EXPECT_LE(std::abs(rho), 1.0);
  }
}

namespace {

SpectrogramData synthetic_spectrogram(double ridge_sign) {
  SpectrogramData s;
  for (int t = 0; t < 50; ++t) s.times.push_back(0.25 + 0.1 * t);
  for (int f = 0; f < 64; ++f) s.freqs.push_back((f - 32) * 0.5);
  s.db.assign(s.times.size() * s.freqs.size(), -60.0);
  for (std::size_t t = 0; t < s.times.size(); ++t) {
    const int f = 32 + static_cast<int>(std::lround(ridge_sign * 8.0 * std::sin(0.3 * static_cast<double>(t))));
    s.db[t * 64 + static_cast<std::size_t>(f)] = 0.0;
  }
  return s;
}

}  // namespace

TEST(SpectrogramCorrelation, SelfAndMirror) {
  const auto a = synthetic_spectrogram(1.0), b = synthetic_spectrogram(-1.0);
  EXPECT_NEAR(spectrogram_correlation(a, a), 1.0, 1e-12);
  const double mirrored = spectrogram_correlation(a, b);
  EXPECT_LT(mirrored, 1.0);
  EXPECT_LE(std::abs(mirrored), 1.0);
  auto c = a;
  c.freqs.pop_back();
  EXPECT_THROW(spectrogram_correlation(a, c), DomainError);
  auto d = a;
  std::fill(d.db.begin(), d.db.end(), 0.0);
  EXPECT_THROW(spectrogram_correlation(a, d), UndefinedCorrelation);
}

TEST(SpectrogramCorrelation, TwinSeedsAtModerateSnr) {
  const RadarConfig cfg;
  const auto array = AntennaArray::single_element();
  const auto centers = centers_at({Vec3(1.0, 0, 0)});
  const auto tracks = moving_tracks(centers, array, cfg, 2000, sinusoid(2.5e-3, 0.25));
  const auto a = spectrogram(synthesize_if(tracks, centers, array, cfg, -10.0, 1));
  const auto b = spectrogram(synthesize_if(tracks, centers, array, cfg, -10.0, 2));
  EXPECT_GT(spectrogram_correlation(a, b), 0.9);
}

TEST(ReferenceCorrelation, IdentityAndDelay) {
  const double rate = 100.0;
  const auto d = tone(3000, rate, 0.27, 1.0);
  const auto self = reference_cross_correlation(d, d, rate);
  EXPECT_NEAR(self.rho, 1.0, 1e-12);
  EXPECT_EQ(self.lag_s, 0.0);
  const auto delayed = tone(3000, rate, 0.27, 1.0, -2.0 * pi * 0.27 * 0.5);  // h(t) = d(t - 0.5)
  const auto c = reference_cross_correlation(d, delayed, rate);
  EXPECT_NEAR(c.lag_s, 0.5, 1e-12);
  EXPECT_NEAR(c.rho, 1.0, 1e-3);
  EXPECT_THROW(reference_cross_correlation(d, std::vector<double>(3000, 0.0), rate), UndefinedCorrelation);
  EXPECT_THROW(reference_cross_correlation(std::vector<double>(100, 1.0), std::vector<double>(100, 1.0), rate),
               DomainError);
}

TEST(ReferenceCorrelation, IndependentNoiseStaysLow) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 1.0);
  int low = 0;
  const int trials = 40;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> a(3000), b(3000);
    for (auto& v : a) v = g(rng);
    for (auto& v : b) v = g(rng);
    if (reference_cross_correlation(a, b, 100.0).rho < 0.3) ++low;
  }
  EXPECT_GE(low, static_cast<int>(0.9 * trials));
}

TEST(RespirationRate, SixtySecondToneWithinResolution) {
  const auto x = tone(6000, 100.0, 0.25, 2e-3, 0.4);
  const auto r = respiration_rate(x, 100.0);
  EXPECT_NEAR(r.frequency, 0.25, 0.017);
  EXPECT_FALSE(r.low_confidence);
  auto scaled = x;
  for (auto& v : scaled) v *= 1e3;
  EXPECT_EQ(respiration_rate(scaled, 100.0).frequency, r.frequency);
}

TEST(RespirationRate, StrongestInBandToneWins) {
  auto x = tone(6000, 100.0, 0.3, 1.0);
  const auto strong_out = tone(6000, 100.0, 1.0, 5.0);
  const auto weak_in = tone(6000, 100.0, 0.2, 0.5);
  const auto slow = tone(6000, 100.0, 0.05, 8.0);
  for (std::size_t k = 0; k < x.size(); ++k) x[k] += strong_out[k] + weak_in[k] + slow[k];
  EXPECT_NEAR(respiration_rate(x, 100.0).frequency, 0.3, 1e-9);
}

TEST(RespirationRate, ShortRecordAndFlatSpectrum) {
  EXPECT_THROW(respiration_rate(std::vector<double>(500, 0.0), 100.0), DomainError);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> noise(6000);
  for (auto& v : noise) v = g(rng);
  const auto r = respiration_rate(noise, 100.0);
  EXPECT_GE(r.frequency, respiration_band_low);
  EXPECT_LE(r.frequency, respiration_band_high);
}

TEST(RateErrors, RmsAndRelative) {
  const std::vector<std::pair<double, double>> pairs = {{0.26, 0.25}, {0.24, 0.25}, {0.2, 0.2}};
  const auto e = rate_errors(pairs);
  EXPECT_NEAR(e.rms, std::sqrt(2.0 * 1e-4 / 3.0), 1e-12);
  EXPECT_NEAR(e.relative, (0.04 + 0.04) / 3.0, 1e-12);
  EXPECT_THROW(rate_errors(std::span<const std::pair<double, double>>{}), DomainError);
}

TEST(MetricsReport, CompareProductsAgainstItself) {
  const RadarConfig cfg;
  const auto array = AntennaArray::linear_79ghz();
  const auto centers = centers_at({Vec3(1.0, 0, 0)});
  const auto cube = synthesize_if(moving_tracks(centers, array, cfg, 2000, sinusoid(2.5e-3, 0.25)), centers, array,
                                  cfg, -20.0, 3);
  const auto p = evaluate_cube(cube);
  const auto r = compare_products(p, p, EvaluationRegion{});
  EXPECT_NEAR(r.image->rho, 1.0, 1e-12);
  EXPECT_NEAR(r.displacement->rho, 1.0, 1e-12);
  EXPECT_EQ(r.displacement->rmse, 0.0);
  EXPECT_NEAR(*r.spectrogram_rho, 1.0, 1e-12);
  EXPECT_NEAR(r.reference->rho, 1.0, 1e-12);
  EXPECT_EQ(r.rate_error->rms, 0.0);
  const auto j = to_json(r);
  EXPECT_DOUBLE_EQ(j.at("image").at("rho_I").get<double>(), r.image->rho);
  EXPECT_DOUBLE_EQ(j.at("spectrogram").at("rho_S").get<double>(), *r.spectrogram_rho);
  EXPECT_DOUBLE_EQ(j.at("rate_error").at("eps_RR_hz").get<double>(), 0.0);
}
