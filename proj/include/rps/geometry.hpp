#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rps/common.hpp"

namespace rps {

// Depth camera operating range in millimeters (ToF sensor spec).
inline constexpr double min_depth_mm = 250.0;
inline constexpr double max_depth_mm = 2880.0;
inline constexpr double default_discontinuity_mm = 50.0;

struct CameraIntrinsics {
  double fx = 0.0;  // pixels
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;

  bool valid() const { return fx > 0.0 && fy > 0.0 && std::isfinite(cx) && std::isfinite(cy); }

  // Pinhole model with square pixels covering the given horizontal field of view.
  static CameraIntrinsics from_fov(int width, int height, double horizontal_fov_deg) {
    const double f = 0.5 * width / std::tan(deg2rad(horizontal_fov_deg) / 2.0);
    return {f, f, 0.5 * (width - 1), 0.5 * (height - 1)};
  }

  bool operator==(const CameraIntrinsics&) const = default;
};

// One depth image. Depth values are millimeters along the optical axis, 0
// marks an invalid pixel.
struct DepthFrame {
  int width = 0;
  int height = 0;
  double timestamp = 0.0;  // seconds
  CameraIntrinsics intrinsics;
  std::vector<float> depth_mm;  // row-major, width*height

  DepthFrame() = default;
  DepthFrame(int w, int h, double t, CameraIntrinsics intr)
      : width(w), height(h), timestamp(t), intrinsics(intr),
        depth_mm(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0.0f) {}

  std::size_t index(int u, int v) const {
    return static_cast<std::size_t>(v) * static_cast<std::size_t>(width) + static_cast<std::size_t>(u);
  }
  float at(int u, int v) const { return depth_mm[index(u, v)]; }
  float& at(int u, int v) { return depth_mm[index(u, v)]; }
  bool valid(int u, int v) const { return depth_mm[index(u, v)] > 0.0f; }

  // Back-projects a pixel to camera coordinates in meters.
  Vec3 camera_point(int u, int v) const {
    const double z = at(u, v) * 1e-3;
    return {(u - intrinsics.cx) * z / intrinsics.fx, (v - intrinsics.cy) * z / intrinsics.fy, z};
  }

  // Throws ValidationError when shape or (optionally) depth range is violated.
  void validate(bool check_operating_range = true) const {
    if (width <= 0 || height <= 0) throw ValidationError("depth frame: width and height must be positive");
    if (depth_mm.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
      throw ValidationError("depth frame: buffer size does not match width*height");
    for (float d : depth_mm) {
      if (!std::isfinite(d) || d < 0.0f) throw ValidationError("depth frame: non-finite or negative depth");
      if (check_operating_range && d != 0.0f && (d < min_depth_mm || d > max_depth_mm))
        throw ValidationError("depth frame: depth " + std::to_string(d) +
                              " mm outside operating range [250, 2880] mm");
    }
  }
};

struct DepthSequence {
  std::vector<DepthFrame> frames;
  double nominal_rate = 15.0;  // Hz

  double duration() const {
    return frames.empty() ? 0.0 : frames.back().timestamp - frames.front().timestamp;
  }
  double start_time() const { return frames.empty() ? 0.0 : frames.front().timestamp; }
  double end_time() const { return frames.empty() ? 0.0 : frames.back().timestamp; }

  void validate(bool check_operating_range = false) const {
    if (frames.empty()) throw ValidationError("depth sequence: no frames");
    if (!(nominal_rate > 0.0)) throw ValidationError("depth sequence: nominal rate must be positive");
    const auto& first = frames.front();
    const double period = 1.0 / nominal_rate;
    for (std::size_t k = 0; k < frames.size(); ++k) {
      const auto& f = frames[k];
      f.validate(check_operating_range);
      if (f.width != first.width || f.height != first.height)
        throw ValidationError("depth sequence: frame " + std::to_string(k) + " has a different size");
      if (k > 0) {
        const double dt = f.timestamp - frames[k - 1].timestamp;
        if (!(dt > 0.0))
          throw ValidationError("depth sequence: timestamps not strictly increasing at frame " +
                                std::to_string(k));
        if (std::abs(dt - period) > 0.2 * period)
          throw ValidationError("depth sequence: frame spacing " + std::to_string(dt) +
                                " s deviates more than 20% from 1/nominal_rate");
      }
    }
  }
};

// Rigid transform from camera coordinates to radar coordinates.
struct ExtrinsicTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& camera_point) const { return rotation * camera_point + translation; }
  Vec3 apply_inverse(const Vec3& radar_point) const { return rotation.transpose() * (radar_point - translation); }
  Vec3 rotate(const Vec3& camera_dir) const { return rotation * camera_dir; }
  Vec3 camera_origin() const { return translation; }

  void validate() const {
    const Mat3 gram = rotation.transpose() * rotation;
    if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9)
      throw ValidationError("extrinsics: rotation is not orthonormal");
    if (std::abs(rotation.determinant() - 1.0) > 1e-9)
      throw ValidationError("extrinsics: rotation determinant is not +1");
    if (!translation.allFinite()) throw ValidationError("extrinsics: translation not finite");
  }

  // Camera at `position` whose optical axis points along radar +x (boresight),
  // image x to radar -y and image y (down) to radar -z.
  static ExtrinsicTransform boresight(const Vec3& position = Vec3::Zero()) {
    ExtrinsicTransform t;
    t.rotation << 0, 0, 1,
                 -1, 0, 0,
                  0, -1, 0;
    t.translation = position;
    return t;
  }
};

struct SurfaceMesh {
  std::vector<Vec3> vertices;                      // radar coordinates, meters
  std::vector<std::array<std::uint32_t, 3>> triangles;
  std::vector<Vec3> vertex_normals;                // unit, zero for invalid vertices
  std::vector<Vec3> facet_normals;                 // unit
  std::vector<double> facet_areas;                 // m^2
  std::vector<std::uint8_t> vertex_valid;          // vertex belongs to at least one triangle
  Vec3 camera_origin = Vec3::Zero();

  std::size_t vertex_count() const { return vertices.size(); }
  std::size_t facet_count() const { return triangles.size(); }
  bool empty() const { return triangles.empty(); }

  Vec3 facet_centroid(std::size_t f) const {
    const auto& t = triangles[f];
    return (vertices[t[0]] + vertices[t[1]] + vertices[t[2]]) / 3.0;
  }

  double total_area() const {
    double a = 0.0;
    for (double x : facet_areas) a += x;
    return a;
  }

  double mean_edge_length() const {
    if (triangles.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& t : triangles)
      for (int e = 0; e < 3; ++e) sum += (vertices[t[e]] - vertices[t[(e + 1) % 3]]).norm();
    return sum / (3.0 * static_cast<double>(triangles.size()));
  }
};

// Inclusive-exclusive pixel rectangle; the default covers the whole image.
struct PixelWindow {
  int u0 = 0, v0 = 0;
  int u1 = std::numeric_limits<int>::max(), v1 = std::numeric_limits<int>::max();
};

namespace detail {

inline double min_triangle_angle(const Vec3& a, const Vec3& b, const Vec3& c) {
  auto angle = [](const Vec3& p, const Vec3& q, const Vec3& r) {
    const Vec3 e1 = q - p, e2 = r - p;
    const double n1 = e1.norm(), n2 = e2.norm();
    if (n1 == 0.0 || n2 == 0.0) return 0.0;
    return std::acos(std::clamp(e1.dot(e2) / (n1 * n2), -1.0, 1.0));
  };
  return std::min({angle(a, b, c), angle(b, c, a), angle(c, a, b)});
}

inline constexpr double min_facet_angle = 1e-3;  // rad

}  // namespace detail

// Grid triangulation of the valid pixels of one frame. Triangles spanning a
// depth jump larger than discontinuity_mm are discarded. Winding is chosen so
// facet normals face the camera.
inline SurfaceMesh depth_to_mesh(const DepthFrame& frame, const ExtrinsicTransform& extrinsics,
                                 double discontinuity_mm = default_discontinuity_mm,
                                 PixelWindow window = {}) {
  if (!frame.intrinsics.valid()) throw ValidationError("depth_to_mesh: invalid intrinsics");
  const int u0 = std::max(0, window.u0), v0 = std::max(0, window.v0);
  const int u1 = std::min(frame.width, window.u1), v1 = std::min(frame.height, window.v1);

  SurfaceMesh mesh;
  mesh.camera_origin = extrinsics.camera_origin();
  if (u1 <= u0 || v1 <= v0) throw DomainError("depth_to_mesh: all pixels invalid (empty mesh)");

  const int ww = u1 - u0;
  std::vector<std::int64_t> vid(static_cast<std::size_t>(ww) * static_cast<std::size_t>(v1 - v0), -1);
  auto local = [&](int u, int v) { return static_cast<std::size_t>(v - v0) * ww + (u - u0); };
  for (int v = v0; v < v1; ++v)
    for (int u = u0; u < u1; ++u)
      if (frame.valid(u, v)) {
        vid[local(u, v)] = static_cast<std::int64_t>(mesh.vertices.size());
        mesh.vertices.push_back(extrinsics.apply(frame.camera_point(u, v)));
      }
  if (mesh.vertices.empty()) throw DomainError("depth_to_mesh: all pixels invalid (empty mesh)");

  std::vector<Vec3> accum(mesh.vertices.size(), Vec3::Zero());
  auto try_add = [&](std::array<std::pair<int, int>, 3> px) {
    std::array<std::uint32_t, 3> ids{};
    float dmin = std::numeric_limits<float>::max(), dmax = 0.0f;
    for (int i = 0; i < 3; ++i) {
      const auto id = vid[local(px[i].first, px[i].second)];
      if (id < 0) return;
      ids[i] = static_cast<std::uint32_t>(id);
      const float d = frame.at(px[i].first, px[i].second);
      dmin = std::min(dmin, d);
      dmax = std::max(dmax, d);
    }
    if (dmax - dmin > discontinuity_mm) return;
    const Vec3& a = mesh.vertices[ids[0]];
    const Vec3& b = mesh.vertices[ids[1]];
    const Vec3& c = mesh.vertices[ids[2]];
    const Vec3 cross = (b - a).cross(c - a);
    const double twice_area = cross.norm();
    if (!(twice_area > 0.0)) return;
    if (detail::min_triangle_angle(a, b, c) <= detail::min_facet_angle) return;
    const Vec3 n = cross / twice_area;
    if (n.dot(mesh.camera_origin - (a + b + c) / 3.0) <= 0.0) return;
    mesh.triangles.push_back(ids);
    mesh.facet_normals.push_back(n);
    mesh.facet_areas.push_back(0.5 * twice_area);
    for (auto id : ids) accum[id] += cross;
  };

  for (int v = v0; v + 1 < v1; ++v)
    for (int u = u0; u + 1 < u1; ++u) {
      const bool a = vid[local(u, v)] >= 0, b = vid[local(u + 1, v)] >= 0;
      const bool c = vid[local(u, v + 1)] >= 0, d = vid[local(u + 1, v + 1)] >= 0;
      const std::pair<int, int> A{u, v}, B{u + 1, v}, C{u, v + 1}, D{u + 1, v + 1};
      if (a && b && c && d) {
        try_add({A, C, B});
        try_add({B, C, D});
      } else if (b && c && d) {
        try_add({B, C, D});
      } else if (a && c && d) {
        try_add({A, C, D});
      } else if (a && b && d) {
        try_add({A, D, B});
      } else if (a && b && c) {
        try_add({A, C, B});
      }
    }
  if (mesh.triangles.empty()) throw DomainError("depth_to_mesh: no valid triangles (empty mesh)");

  mesh.vertex_normals.resize(mesh.vertices.size());
  mesh.vertex_valid.resize(mesh.vertices.size());
  for (std::size_t i = 0; i < accum.size(); ++i) {
    const double n = accum[i].norm();
    mesh.vertex_valid[i] = n > 0.0;
    mesh.vertex_normals[i] = n > 0.0 ? Vec3(accum[i] / n) : Vec3::Zero();
  }
  return mesh;
}

// Flat rectangular grid of nu x nv vertices spanning width along u_axis and
// height along v_axis, centered on `center`. Facets are wound toward `viewer`.
inline SurfaceMesh rectangular_patch(const Vec3& center, const Vec3& u_axis, const Vec3& v_axis, double width,
                                     double height, std::size_t nu, std::size_t nv, const Vec3& viewer = Vec3::Zero()) {
  if (nu < 2 || nv < 2) throw ValidationError("rectangular_patch: need at least 2 x 2 vertices");
  if (!(width > 0.0 && height > 0.0)) throw ValidationError("rectangular_patch: width and height must be positive");
  const Vec3 eu = u_axis.normalized(), ev = v_axis.normalized();
  SurfaceMesh mesh;
  mesh.camera_origin = viewer;
  for (std::size_t j = 0; j < nv; ++j)
    for (std::size_t i = 0; i < nu; ++i) {
      const double a = (static_cast<double>(i) / static_cast<double>(nu - 1) - 0.5) * width;
      const double b = (static_cast<double>(j) / static_cast<double>(nv - 1) - 0.5) * height;
      mesh.vertices.push_back(center + a * eu + b * ev);
    }
  Vec3 n = eu.cross(ev).normalized();
  const bool flip = n.dot(viewer - center) < 0.0;
  if (flip) n = -n;
  auto id = [nu](std::size_t i, std::size_t j) { return static_cast<std::uint32_t>(j * nu + i); };
  for (std::size_t j = 0; j + 1 < nv; ++j)
    for (std::size_t i = 0; i + 1 < nu; ++i) {
      std::array<std::array<std::uint32_t, 3>, 2> tris{{{id(i, j), id(i + 1, j), id(i, j + 1)},
                                                        {id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)}}};
      for (auto t : tris) {
        if (flip) std::swap(t[1], t[2]);
        const Vec3& p0 = mesh.vertices[t[0]];
        mesh.triangles.push_back(t);
        mesh.facet_normals.push_back(n);
        mesh.facet_areas.push_back(0.5 * (mesh.vertices[t[1]] - p0).cross(mesh.vertices[t[2]] - p0).norm());
      }
    }
  mesh.vertex_normals.assign(mesh.vertices.size(), n);
  mesh.vertex_valid.assign(mesh.vertices.size(), 1);
  return mesh;
}

// Per-pixel mean over the frames where the pixel is valid. A pixel valid in
// fewer than min_valid_fraction of the frames is marked invalid.
inline DepthFrame time_average_depth(const DepthSequence& seq, double min_valid_fraction = 0.5) {
  if (seq.frames.empty()) throw ValidationError("time_average_depth: empty sequence");
  const auto& first = seq.frames.front();
  DepthFrame out(first.width, first.height, 0.5 * (seq.start_time() + seq.end_time()), first.intrinsics);
  const std::size_t n = out.depth_mm.size();
  std::vector<double> sum(n, 0.0);
  std::vector<std::uint32_t> count(n, 0);
  for (const auto& f : seq.frames) {
    if (f.depth_mm.size() != n) throw ValidationError("time_average_depth: frame size mismatch");
    for (std::size_t i = 0; i < n; ++i)
      if (f.depth_mm[i] > 0.0f) {
        sum[i] += f.depth_mm[i];
        ++count[i];
      }
  }
  const double needed = min_valid_fraction * static_cast<double>(seq.frames.size());
  for (std::size_t i = 0; i < n; ++i)
    if (count[i] > 0 && static_cast<double>(count[i]) >= needed)
      out.depth_mm[i] = static_cast<float>(sum[i] / count[i]);
  return out;
}

// Index of the frame nearest t; ties go to the earlier frame.
inline std::size_t nearest_frame(const DepthSequence& seq, double t) {
  if (seq.frames.empty()) throw ValidationError("nearest_frame: empty sequence");
  if (t < seq.start_time() || t > seq.end_time())
    throw DomainError("surface_at: t = " + std::to_string(t) + " s outside sequence span [" +
                      std::to_string(seq.start_time()) + ", " + std::to_string(seq.end_time()) + "]");
  auto it = std::lower_bound(seq.frames.begin(), seq.frames.end(), t,
                             [](const DepthFrame& f, double x) { return f.timestamp < x; });
  std::size_t k = static_cast<std::size_t>(it - seq.frames.begin());
  if (k == seq.frames.size()) return k - 1;
  if (k > 0 && t - seq.frames[k - 1].timestamp <= seq.frames[k].timestamp - t) return k - 1;
  return k;
}

// Surface at time t, meshed from the nearest frame (no image interpolation).
inline SurfaceMesh surface_at(const DepthSequence& seq, double t, const ExtrinsicTransform& extrinsics,
                              double discontinuity_mm = default_discontinuity_mm) {
  return depth_to_mesh(seq.frames[nearest_frame(seq, t)], extrinsics, discontinuity_mm);
}

}  // namespace rps
