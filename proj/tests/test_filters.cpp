#include <gtest/gtest.h>

#include <random>

#include "rps/filters.hpp"
#include "support.hpp"

using namespace rps;

// Reference values below were produced once with scipy.signal
// (windows.taylor, butter(output='sos'), sosfreqz, sosfiltfilt) and frozen.

TEST(TaylorWindow, MatchesReferenceEvenLength) {
  const std::vector<double> half = {0.2594233849085965, 0.378155355815231,  0.5641031333424653,
                                    0.754597728914996,  0.9054538662999985, 0.9890941970644014};
  const auto w = taylor_window(12, 4, 30.0);
  ASSERT_EQ(w.size(), 12u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_NEAR(w[i], half[i], 1e-12);
    EXPECT_NEAR(w[11 - i], half[i], 1e-12);
  }
}

TEST(TaylorWindow, MatchesReferenceOddLength) {
  const std::vector<double> ref = {0.29009531272714734, 0.5782126011092212, 0.8780082248652833, 1.0,
                                   0.8780082248652833,  0.5782126011092212, 0.2900953127271472};
  const auto w = taylor_window(7, 4, 30.0);
  ASSERT_EQ(w.size(), ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(w[i], ref[i], 1e-12);
}

TEST(TaylorWindow, DegenerateLengths) {
  EXPECT_TRUE(taylor_window(0).empty());
  EXPECT_EQ(taylor_window(1), std::vector<double>{1.0});
}

TEST(Butterworth, HighpassMagnitudeMatchesReference) {
  const auto sos = butterworth_highpass(5, 0.05, 100.0);
  const std::vector<std::pair<double, double>> ref = {
      {0.01, 3.1999872042973290e-04}, {0.02, 1.0239427803271167e-02}, {0.05, 7.0710678118628700e-01},
      {0.1, 9.9951208811743930e-01},  {0.5, 9.9999999995006994e-01},  {5.0, 9.9999999999999345e-01}};
  for (const auto& [f, mag] : ref) EXPECT_NEAR(std::abs(frequency_response(sos, f, 100.0)), mag, 1e-9 * mag + 1e-12) << f;
  EXPECT_NEAR(std::abs(frequency_response(sos, 0.0, 100.0)), 0.0, 1e-12);
  EXPECT_THROW(butterworth_highpass(0, 0.05, 100.0), DomainError);
  EXPECT_THROW(butterworth_highpass(5, 60.0, 100.0), DomainError);
}

namespace {

std::vector<double> filtfilt_probe() {
  std::vector<double> x(1500);
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double t = static_cast<double>(k) / 100.0;
    x[k] = std::sin(2.0 * pi * 0.3 * t) + 0.5 + 0.02 * t + 0.2 * std::sin(2.0 * pi * 0.01 * t);
  }
  return x;
}

const std::vector<std::size_t> probe_index = {0, 1, 100, 750, 1400, 1499};

}  // namespace

TEST(Filtfilt, MatchesReferenceWithLongPadding) {
  const std::vector<double> ref = {-0.03587703994358146, -0.0170288662285962, 0.9167763555114815,
                                   1.0390835498255773,   0.9664911664778482, 0.00417769599601822};
  const auto y = filtfilt(butterworth_highpass(5, 0.05, 100.0), filtfilt_probe(), 1499);
  for (std::size_t i = 0; i < probe_index.size(); ++i) EXPECT_NEAR(y[probe_index[i]], ref[i], 1e-8);
}

TEST(Filtfilt, MatchesReferenceWithShortPadding) {
  const std::vector<double> ref = {-0.15941871811157454, -0.14002296579900053, 0.8418611735321261,
                                   1.0327579580417081,   0.9871985189719598, -0.00797298694555115};
  const auto y = filtfilt(butterworth_highpass(5, 0.05, 100.0), filtfilt_probe(), 300);
  for (std::size_t i = 0; i < probe_index.size(); ++i) EXPECT_NEAR(y[probe_index[i]], ref[i], 1e-8);
  EXPECT_THROW(filtfilt(butterworth_highpass(5, 0.05, 100.0), filtfilt_probe(), 1500), DomainError);
}

TEST(RespirationHighpass, RemovesDriftKeepsBreathing) {
  const double rate = 100.0;
  std::vector<double> breath(6000), drift(6000), x(6000);
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double t = static_cast<double>(k) / rate;
    breath[k] = 2.5e-3 * std::sin(2.0 * pi * 0.25 * t);
    drift[k] = 4e-3 * t / 60.0 + 1e-3;
    x[k] = breath[k] + drift[k];
  }
  const auto y = respiration_highpass(x, rate);
  const auto [amp, phase] = fixtures::fit_sinusoid(y, rate, 0.25);
  EXPECT_NEAR(amp, 2.5e-3, 0.02 * 2.5e-3);
  EXPECT_NEAR(phase, 0.0, 0.01);
  std::vector<double> residual(y.size());
  for (std::size_t k = 0; k < y.size(); ++k) residual[k] = y[k] - breath[k];
  EXPECT_GT(20.0 * std::log10(fixtures::rms(drift) / fixtures::rms(residual)), 20.0);
}

TEST(RespirationHighpass, LowFrequencyPowerIsSuppressed) {
  // d_HF keeps < 1e-3 of the input power below 0.02 Hz
  const double rate = 100.0;
  std::vector<double> x(6000);
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = std::sin(2.0 * pi * (1.0 / 60.0) * k / rate);
  const auto y = respiration_highpass(x, rate);
  EXPECT_LT(std::pow(fixtures::rms(y) / fixtures::rms(x), 2.0), 1e-3);
}

TEST(Unwrap, MatchesCumulativeOracle) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> step(0.0, 0.6);
  std::vector<double> truth(500);
  for (std::size_t i = 1; i < truth.size(); ++i) truth[i] = truth[i - 1] + std::clamp(step(rng), -3.0, 3.0);
  std::vector<double> wrapped(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) wrapped[i] = std::atan2(std::sin(truth[i]), std::cos(truth[i]));
  auto phase = wrapped;
  unwrap_phase(phase);
  const double offset = phase[0] - truth[0];
  for (std::size_t i = 0; i < truth.size(); ++i) EXPECT_NEAR(phase[i] - offset, truth[i], 1e-9);
}

TEST(Unwrap, FlagsAmbiguousSteps) {
  std::vector<double> phase = {0.0, 0.5, 0.5 + 0.8 * pi, 0.5 + 0.9 * pi};
  EXPECT_EQ(unwrap_phase(phase), 1u);
  std::vector<double> smooth = {0.0, 3.0, -3.0, 3.0};
  auto copy = smooth;
  unwrap_phase(copy);
  EXPECT_NEAR(copy[2], 2.0 * pi - 3.0, 1e-12);
  EXPECT_NEAR(copy[3], 3.0, 1e-12);
}
