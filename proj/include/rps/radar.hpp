#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "rps/common.hpp"

namespace rps {

// FMCW chirp and sampling parameters. Defaults follow the 79 GHz radar used
// for the respiration experiments.
struct RadarConfig {
  double center_frequency = 79e9;     // Hz
  double bandwidth = 3.354e9;         // Hz
  double chirp_duration = 100e-6;     // s
  double slow_rate = 100.0;           // chirps per second
  std::size_t fast_samples = 256;
  double c = speed_of_light;
  double mu = vacuum_permeability;

  double start_frequency() const { return center_frequency - 0.5 * bandwidth; }
  double chirp_rate() const { return bandwidth / chirp_duration; }
  double wavelength() const { return c / center_frequency; }
  double wavenumber() const { return 2.0 * pi / wavelength(); }
  double angular_frequency() const { return 2.0 * pi * center_frequency; }
  double impedance() const { return mu * c; }
  double fast_sample_interval() const { return chirp_duration / static_cast<double>(fast_samples); }
  double range_resolution() const { return c / (2.0 * bandwidth); }
  double beat_frequency(double range) const { return 2.0 * chirp_rate() * range / c; }

  void validate() const {
    if (!(center_frequency > 0.0 && bandwidth > 0.0 && chirp_duration > 0.0 && slow_rate > 0.0))
      throw ValidationError("radar config: frequencies, durations and rates must be positive");
    if (bandwidth >= 2.0 * center_frequency) throw ValidationError("radar config: bandwidth exceeds 2*fc");
    if (fast_samples < 8) throw ValidationError("radar config: fast_samples must be >= 8");
    if (!(c > 0.0 && mu > 0.0)) throw ValidationError("radar config: c and mu must be positive");
  }

  bool operator==(const RadarConfig&) const = default;
};

// Azimuth is measured in the horizontal x-y plane from boresight (+x) toward
// +y; elevation from that plane toward +z.
inline double azimuth_of(const Vec3& d) { return std::atan2(d.y(), d.x()); }
inline double elevation_of(const Vec3& d) { return std::atan2(d.z(), std::hypot(d.x(), d.y())); }

inline Vec3 unit_direction(double azimuth, double elevation) {
  return {std::cos(elevation) * std::cos(azimuth), std::cos(elevation) * std::sin(azimuth), std::sin(elevation)};
}

// Separable raised-cosine power pattern: -3 dB at the half-beamwidth, zero at
// twice the half-beamwidth, and zero outside +/-90 deg.
struct DirectivityPattern {
  double azimuth_half_beamwidth_deg = 90.0;
  double elevation_half_beamwidth_deg = 90.0;

  static double axis_gain(double angle, double half_beamwidth) {
    const double a = std::abs(angle);
    const double zero_at = std::min(2.0 * half_beamwidth, pi / 2.0);
    if (a >= zero_at) return 0.0;
    return 0.5 * (1.0 + std::cos(pi * a / (2.0 * half_beamwidth)));
  }

  double power_gain(double azimuth, double elevation) const {
    return axis_gain(azimuth, deg2rad(azimuth_half_beamwidth_deg)) *
           axis_gain(elevation, deg2rad(elevation_half_beamwidth_deg));
  }
  double field_gain(double azimuth, double elevation) const { return std::sqrt(power_gain(azimuth, elevation)); }
  double field_gain(const Vec3& direction) const {
    return field_gain(azimuth_of(direction), elevation_of(direction));
  }

  bool operator==(const DirectivityPattern&) const = default;
};

enum class ArrayWindow { taylor, rectangular };

// MIMO array. Virtual element m = (i, j) sits at the midpoint of Tx i and Rx j,
// so that the round-trip path to a far target is 2*|p_m - q|. Positions are in
// radar coordinates; the array factories center the virtual array on the
// origin.
class AntennaArray {
 public:
  AntennaArray() = default;
  AntennaArray(std::vector<Vec3> tx, std::vector<Vec3> rx, DirectivityPattern tx_pattern,
               DirectivityPattern rx_pattern, ArrayWindow window)
      : tx_(std::move(tx)), rx_(std::move(rx)), tx_pattern_(tx_pattern), rx_pattern_(rx_pattern), window_(window) {
    if (tx_.empty() || rx_.empty()) throw ValidationError("antenna array: needs at least one Tx and one Rx");
    virtual_.reserve(tx_.size() * rx_.size());
    for (const auto& t : tx_)
      for (const auto& r : rx_) virtual_.push_back(0.5 * (t + r));
  }

  // 3 Tx spaced 7.6 mm and 4 Rx spaced 1.9 mm along the horizontal y axis:
  // 12 uniformly spaced virtual elements.
  static AntennaArray linear_79ghz() {
    return AntennaArray(centered_line(3, 7.6e-3, Vec3::UnitY()), centered_line(4, 1.9e-3, Vec3::UnitY()),
                        {35.0, 4.0}, {45.0, 4.0}, ArrayWindow::taylor);
  }

  // 3 Tx stacked vertically and 4 Rx horizontally, both spaced 1.9 mm:
  // a 4 x 3 virtual grid.
  static AntennaArray planar_79ghz() {
    return AntennaArray(centered_line(3, 1.9e-3, Vec3::UnitZ()), centered_line(4, 1.9e-3, Vec3::UnitY()),
                        {33.0, 45.0}, {45.0, 45.0}, ArrayWindow::rectangular);
  }

  static AntennaArray single_element(DirectivityPattern pattern = {}) {
    return AntennaArray({Vec3::Zero()}, {Vec3::Zero()}, pattern, pattern, ArrayWindow::rectangular);
  }

  static std::vector<Vec3> centered_line(std::size_t n, double spacing, const Vec3& axis) {
    std::vector<Vec3> out;
    const double mid = 0.5 * static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) out.push_back((static_cast<double>(i) - mid) * spacing * axis);
    return out;
  }

  std::size_t size() const { return virtual_.size(); }
  const std::vector<Vec3>& tx_positions() const { return tx_; }
  const std::vector<Vec3>& rx_positions() const { return rx_; }
  const std::vector<Vec3>& virtual_positions() const { return virtual_; }
  const Vec3& position(std::size_t m) const { return virtual_[m]; }
  const DirectivityPattern& tx_pattern() const { return tx_pattern_; }
  const DirectivityPattern& rx_pattern() const { return rx_pattern_; }
  ArrayWindow window() const { return window_; }

  Vec3 centroid() const {
    Vec3 c = Vec3::Zero();
    for (const auto& p : virtual_) c += p;
    return c / static_cast<double>(virtual_.size());
  }

  // True when the virtual elements span a plane rather than a line.
  bool is_planar() const {
    if (virtual_.size() < 3) return false;
    const Vec3 c = centroid();
    Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
    for (const auto& p : virtual_) scatter += (p - c) * (p - c).transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(scatter);
    const auto ev = es.eigenvalues();
    return ev(1) > 1e-9 * std::max(ev(2), 1e-30);
  }

  bool operator==(const AntennaArray& o) const {
    return tx_ == o.tx_ && rx_ == o.rx_ && tx_pattern_ == o.tx_pattern_ && rx_pattern_ == o.rx_pattern_ &&
           window_ == o.window_;
  }

 private:
  std::vector<Vec3> tx_, rx_, virtual_;
  DirectivityPattern tx_pattern_, rx_pattern_;
  ArrayWindow window_ = ArrayWindow::taylor;
};

}  // namespace rps
