#pragma once

// Physical-optics surface currents, kernel-localized scattering power and
// scattering-center extraction on a triangulated body surface.
//
// Time convention exp(+jwt): outgoing spherical waves carry exp(-jkR). The
// receive Green dyadic uses its far-field form z.(I - RR); the discarded
// 1/(kR) terms are below 1e-3 for kR > 1000.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "rps/common.hpp"
#include "rps/geometry.hpp"
#include "rps/parallel.hpp"
#include "rps/radar.hpp"
#include "rps/spatial_grid.hpp"

namespace rps {

// Incident magnetic field at r from a z-polarized spherical wave launched at
// the array centroid and weighted by the Tx directivity. The source amplitude
// is normalized to 1 (absolute power is defined up to a global constant).
inline CVec3 incident_magnetic_field(const Vec3& r, const AntennaArray& array, const RadarConfig& cfg) {
  const Vec3 d = r - array.centroid();
  const double R = d.norm();
  if (R < cfg.wavelength())
    throw SingularityError("incident field: point closer than one wavelength to the array centroid");
  const Vec3 khat = d / R;
  const double k = cfg.wavenumber();
  const Complex psi = array.tx_pattern().field_gain(khat) * std::exp(Complex(0.0, -k * R)) / (4.0 * pi * R);
  return (psi / cfg.impedance()) * khat.cross(Vec3::UnitZ()).cast<Complex>();
}

inline bool is_illuminated(const Vec3& r, const Vec3& normal, const Vec3& source) {
  return normal.dot(r - source) < 0.0;
}

// K = 2 n x H^i on the illuminated side, zero where n.(r - p) >= 0.
inline CVec3 po_current(const Vec3& r, const Vec3& normal, const AntennaArray& array, const RadarConfig& cfg) {
  if (!is_illuminated(r, normal, array.centroid())) return CVec3::Zero();
  const CVec3 h = incident_magnetic_field(r, array, cfg);
  return 2.0 * normal.cast<Complex>().cross(h);
}

// Per-vertex PO currents; invalid vertices carry zero current.
inline std::vector<CVec3> po_surface_current(const SurfaceMesh& mesh, const AntennaArray& array,
                                             const RadarConfig& cfg) {
  if (mesh.empty()) throw DomainError("po_surface_current: empty mesh");
  std::vector<CVec3> k(mesh.vertex_count(), CVec3::Zero());
  for (std::size_t i = 0; i < mesh.vertex_count(); ++i)
    if (mesh.vertex_valid[i]) k[i] = po_current(mesh.vertices[i], mesh.vertex_normals[i], array, cfg);
  return k;
}

// PO currents at facet centroids (one-point quadrature), using facet normals.
inline std::vector<CVec3> facet_currents(const SurfaceMesh& mesh, const AntennaArray& array, const RadarConfig& cfg) {
  if (mesh.empty()) throw DomainError("facet_currents: empty mesh");
  std::vector<CVec3> k(mesh.facet_count());
  for (std::size_t f = 0; f < mesh.facet_count(); ++f)
    k[f] = po_current(mesh.facet_centroid(f), mesh.facet_normals[f], array, cfg);
  return k;
}

// z-component of the field radiated to the array centroid by current k on a
// patch of area `area` at rho, using the far-field Green dyadic and the Rx
// directivity.
inline Complex radiated_ez(const Vec3& rho, const CVec3& k, double area, const AntennaArray& array,
                           const RadarConfig& cfg) {
  const Vec3 to_rx = array.centroid() - rho;
  const double R = to_rx.norm();
  if (R < cfg.wavelength()) throw SingularityError("radiated field: source closer than one wavelength");
  const Vec3 rhat = to_rx / R;
  const double wk = cfg.wavenumber();
  const Complex g = array.rx_pattern().field_gain(Vec3(-rhat)) * std::exp(Complex(0.0, -wk * R)) / (4.0 * pi * R);
  // z.(I - RR).K = K_z - R_z (R.K)
  const Complex proj = k.z() - rhat.z() * (rhat.cast<Complex>().dot(k));
  return Complex(0.0, -cfg.angular_frequency() * cfg.mu) * g * proj * area;
}

inline std::vector<Complex> facet_field_contributions(const SurfaceMesh& mesh, const AntennaArray& array,
                                                      const RadarConfig& cfg, const std::vector<CVec3>& currents) {
  if (currents.size() != mesh.facet_count()) throw std::invalid_argument("facet currents size mismatch");
  std::vector<Complex> c(mesh.facet_count());
  for (std::size_t f = 0; f < mesh.facet_count(); ++f)
    c[f] = currents[f].isZero(0.0) ? Complex(0.0)
                                  : radiated_ez(mesh.facet_centroid(f), currents[f], mesh.facet_areas[f], array, cfg);
  return c;
}

// Total received E_z over the whole surface.
inline Complex scattered_field(const SurfaceMesh& mesh, const AntennaArray& array, const RadarConfig& cfg) {
  const auto c = facet_field_contributions(mesh, array, cfg, facet_currents(mesh, array, cfg));
  Complex sum = 0.0;
  for (const auto& x : c) sum += x;
  return sum;
}

// Cosine-tapered localization window: 1 at zero distance, 0 at and beyond a0.
struct EyeKernel {
  double a0;
  double weight(double distance) const {
    return distance < a0 ? 0.5 * (std::cos(pi * distance / a0) + 1.0) : 0.0;
  }
  double support() const { return a0; }
};

// Unit weight everywhere; reproduces the unlocalized field integral.
struct UniformKernel {
  double weight(double) const { return 1.0; }
  double support() const { return std::numeric_limits<double>::infinity(); }
};

struct ScatterPowerMap {
  std::shared_ptr<const SurfaceMesh> mesh;
  std::vector<double> power;  // per vertex, linear
  double a0 = 0.0;
  Warnings warnings;

  double max_power() const { return power.empty() ? 0.0 : *std::max_element(power.begin(), power.end()); }
};

namespace detail {

template <typename Kernel>
Complex localized_field(const Vec3& r, const std::vector<Vec3>& centroids, const std::vector<Complex>& contrib,
                        const SpatialGrid* grid, const Kernel& kernel) {
  Complex sum = 0.0;
  if (!grid) {
    for (std::size_t f = 0; f < centroids.size(); ++f) sum += kernel.weight((r - centroids[f]).norm()) * contrib[f];
  } else {
    grid->for_each_within(r, kernel.support(), [&](std::size_t f, double d) { sum += kernel.weight(d) * contrib[f]; });
  }
  return sum;
}

}  // namespace detail

// P^S(r) = |sum_f w(r, rho_f) c_f|^2 at every vertex, where c_f is the facet's
// contribution to the received E_z. Shadowed and invalid vertices get 0.
template <typename Kernel>
ScatterPowerMap scatter_power_map(std::shared_ptr<const SurfaceMesh> mesh, const AntennaArray& array,
                                  const RadarConfig& cfg, const Kernel& kernel,
                                  const std::vector<CVec3>* currents_override = nullptr) {
  if (!mesh || mesh->empty()) throw DomainError("scatter_power_map: empty mesh");
  ScatterPowerMap out;
  out.mesh = mesh;
  out.a0 = kernel.support();
  if (!(kernel.support() > 0.0)) throw DomainError("scatter_power_map: kernel radius must be positive");
  if (std::isfinite(kernel.support()) && kernel.support() < mesh->mean_edge_length())
    out.warnings.push_back("kernel radius smaller than mean edge length: kernel under-resolved");

  const auto currents = currents_override ? *currents_override : facet_currents(*mesh, array, cfg);
  const auto contrib = facet_field_contributions(*mesh, array, cfg, currents);
  std::vector<Vec3> centroids(mesh->facet_count());
  for (std::size_t f = 0; f < centroids.size(); ++f) centroids[f] = mesh->facet_centroid(f);

  std::unique_ptr<SpatialGrid> grid;
  if (std::isfinite(kernel.support())) grid = std::make_unique<SpatialGrid>(centroids, kernel.support());

  const Vec3 source = array.centroid();
  out.power.assign(mesh->vertex_count(), 0.0);
  parallel_for(
      mesh->vertex_count(),
      [&](std::size_t i) {
        if (!mesh->vertex_valid[i] || !is_illuminated(mesh->vertices[i], mesh->vertex_normals[i], source)) return;
        out.power[i] = std::norm(detail::localized_field(mesh->vertices[i], centroids, contrib, grid.get(), kernel));
      },
      256);
  return out;
}

inline ScatterPowerMap scatter_power_map(std::shared_ptr<const SurfaceMesh> mesh, const AntennaArray& array,
                                         const RadarConfig& cfg, double a0) {
  if (!(a0 > 0.0)) throw DomainError("scatter_power_map: a0 must be positive");
  return scatter_power_map(std::move(mesh), array, cfg, EyeKernel{a0});
}

// Kernel-localized power at an arbitrary point.
template <typename Kernel>
double scatter_power_at(const Vec3& r, const SurfaceMesh& mesh, const AntennaArray& array, const RadarConfig& cfg,
                        const Kernel& kernel) {
  const auto contrib = facet_field_contributions(mesh, array, cfg, facet_currents(mesh, array, cfg));
  std::vector<Vec3> centroids(mesh.facet_count());
  for (std::size_t f = 0; f < centroids.size(); ++f) centroids[f] = mesh.facet_centroid(f);
  return std::norm(detail::localized_field(r, centroids, contrib, nullptr, kernel));
}

struct ScatteringCenter {
  Vec3 position = Vec3::Zero();
  double power = 0.0;                // P^S, linear
  double amplitude = 0.0;            // sqrt(power)
  Complex phase_term{-1.0, 0.0};     // eta, unit magnitude
  std::size_t vertex = 0;

  Complex complex_amplitude() const { return amplitude * phase_term; }
};

struct ScatteringCenterSet {
  std::vector<ScatteringCenter> centers;
  double threshold_db = -20.0;
  double max_power = 0.0;

  std::size_t size() const { return centers.size(); }
  bool empty() const { return centers.empty(); }
};

// Opposed phase: eta = exp(j*pi).
inline const Complex opposed_phase = std::polar(1.0, pi);

// Discrete local maxima of P^S: a vertex qualifies when its power strictly
// exceeds every other vertex within neighborhood_radius and is at least
// max_power * 10^(threshold_db/10). Powers equal to within tie_tolerance
// count as a tie, resolved toward the lower vertex index. Centers are ordered
// by decreasing power.
inline constexpr double tie_tolerance = 1e-12;

inline ScatteringCenterSet extract_centers(const ScatterPowerMap& map, double threshold_db = -20.0,
                                           double neighborhood_radius = 0.0, Complex eta = opposed_phase) {
  if (!map.mesh) throw DomainError("extract_centers: power map not computed");
  const double radius = neighborhood_radius > 0.0 ? neighborhood_radius : map.a0;
  if (!(radius > 0.0) || !std::isfinite(radius))
    throw DomainError("extract_centers: neighborhood radius must be positive and finite");

  ScatteringCenterSet out;
  out.threshold_db = threshold_db;
  out.max_power = map.max_power();
  if (!(out.max_power > 0.0)) return out;
  const double floor = out.max_power * from_db10(threshold_db);

  const auto& verts = map.mesh->vertices;
  SpatialGrid grid(verts, radius);
  for (std::size_t i = 0; i < verts.size(); ++i) {
    const double p = map.power[i];
    if (!(p > 0.0) || p < floor) continue;
    bool is_max = true;
    grid.for_each_within(verts[i], radius, [&](std::size_t j, double) {
      if (j == i) return;
      const double q = map.power[j];
      // exact ties (symmetric surfaces) go to the lower vertex index
      if (q > p * (1.0 + tie_tolerance) || (q >= p * (1.0 - tie_tolerance) && j < i)) is_max = false;
    });
    if (!is_max) continue;
    out.centers.push_back({verts[i], p, std::sqrt(p), eta, i});
  }
  std::stable_sort(out.centers.begin(), out.centers.end(),
                   [](const ScatteringCenter& a, const ScatteringCenter& b) { return a.power > b.power; });
  return out;
}

}  // namespace rps
