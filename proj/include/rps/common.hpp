#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace rps {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Complex = std::complex<double>;
using CVec3 = Eigen::Vector3cd;

inline constexpr double pi = std::numbers::pi;
inline constexpr double speed_of_light = 299792458.0;      // m/s
inline constexpr double vacuum_permeability = 1.25663706212e-6;  // H/m

inline constexpr double deg2rad(double deg) { return deg * pi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / pi; }

// Error categories. The CLI maps the first three to exit code 2.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SingularityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Warnings = std::vector<std::string>;

inline double db10(double linear) { return 10.0 * std::log10(linear); }
inline double from_db10(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace rps
