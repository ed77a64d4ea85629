#pragma once

// Synthetic breathing-body scenes built from ellipsoids, cylinders and flat
// plates, ray-cast into depth sequences with exact ground truth.
//
// Each part is defined in a local frame whose -x side faces the radar. A
// breathing part moves its surface along the outward normal by
// w(t) * exp(-|x - x_ref|^2 / (2 sigma^2)), where x_ref is the front point of
// the part; sigma = 0 gives a uniform (rigid-normal) displacement.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "rps/common.hpp"
#include "rps/geometry.hpp"
#include "rps/parallel.hpp"

namespace rps {

enum class Shape { ellipsoid, cylinder, plane };

inline constexpr double max_breathing_amplitude = 0.02;  // m
inline constexpr double min_breathing_frequency = 0.05;  // Hz
inline constexpr double max_breathing_frequency = 0.5;   // Hz

struct Breathing {
  enum class Waveform { sinusoid, trace };
  Waveform waveform = Waveform::sinusoid;
  double amplitude = 0.0;    // m, along the outward normal
  double frequency = 0.25;   // Hz
  double phase = 0.0;        // rad
  double taper_sigma = 0.0;  // m, 0 = uniform
  std::vector<double> trace_t;  // s
  std::vector<double> trace_d;  // m
  std::string trace_file;

  // Configured normal displacement w(t).
  double value(double t) const {
    if (waveform == Waveform::sinusoid) return amplitude * std::sin(2.0 * pi * frequency * t + phase);
    if (trace_t.empty()) return 0.0;
    if (t <= trace_t.front()) return trace_d.front();
    if (t >= trace_t.back()) return trace_d.back();
    const auto it = std::upper_bound(trace_t.begin(), trace_t.end(), t);
    const auto j = static_cast<std::size_t>(it - trace_t.begin());
    const double a = (t - trace_t[j - 1]) / (trace_t[j] - trace_t[j - 1]);
    return (1.0 - a) * trace_d[j - 1] + a * trace_d[j];
  }

  double peak() const {
    if (waveform == Waveform::sinusoid) return std::abs(amplitude);
    double p = 0.0;
    for (double d : trace_d) p = std::max(p, std::abs(d));
    return p;
  }

  void validate(const std::string& part) const {
    if (waveform == Waveform::sinusoid) {
      if (!(std::abs(amplitude) < max_breathing_amplitude))
        throw ValidationError("part '" + part + "': breathing amplitude " + std::to_string(amplitude) +
                              " m violates |amplitude| < 0.02 m");
      if (amplitude != 0.0 && (frequency < min_breathing_frequency || frequency > max_breathing_frequency))
        throw ValidationError("part '" + part + "': breathing frequency " + std::to_string(frequency) +
                              " Hz outside [0.05, 0.5] Hz");
    } else {
      if (trace_t.size() < 2 || trace_t.size() != trace_d.size())
        throw ValidationError("part '" + part + "': breathing trace needs at least two (t, d) samples");
      for (std::size_t i = 1; i < trace_t.size(); ++i)
        if (!(trace_t[i] > trace_t[i - 1]))
          throw ValidationError("part '" + part + "': breathing trace times not strictly increasing");
      if (!(peak() < max_breathing_amplitude))
        throw ValidationError("part '" + part + "': breathing trace peak " + std::to_string(peak()) +
                              " m violates |amplitude| < 0.02 m");
    }
    if (!(taper_sigma >= 0.0)) throw ValidationError("part '" + part + "': taper sigma must be >= 0");
  }
};

// Reads a two-column CSV (time s, displacement m). Lines that do not parse as
// two numbers (headers, comments) are skipped.
inline std::pair<std::vector<double>, std::vector<double>> read_trace_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open breathing trace " + path.string());
  std::vector<double> t, d;
  std::string line;
  while (std::getline(is, line)) {
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double a, b;
    if (ls >> a >> b) {
      t.push_back(a);
      d.push_back(b);
    }
  }
  if (t.size() < 2) throw FormatError("breathing trace " + path.string() + " has fewer than two samples");
  return {t, d};
}

struct PartConfig {
  std::string name;
  Shape shape = Shape::ellipsoid;
  // ellipsoid: semi-axes (depth, width, height); cylinder: (radius, unused,
  // height); plane: (unused, width, height).
  Vec3 size = Vec3(0.1, 0.1, 0.1);
  Vec3 position = Vec3::Zero();            // radar coordinates, m
  Vec3 orientation_deg = Vec3::Zero();     // yaw (z), pitch (y), roll (x)
  Breathing breathing;
};

struct SceneCamera {
  int width = 256;
  int height = 256;
  double fov_deg = 60.0;
  Vec3 position = Vec3::Zero();  // radar coordinates
  double yaw_deg = 0.0;          // about radar z
  double pitch_deg = 0.0;        // positive tilts the optical axis up

  CameraIntrinsics intrinsics() const { return CameraIntrinsics::from_fov(width, height, fov_deg); }
  ExtrinsicTransform extrinsics() const {
    ExtrinsicTransform t = ExtrinsicTransform::boresight(position);
    const Mat3 turn = (Eigen::AngleAxisd(deg2rad(yaw_deg), Vec3::UnitZ()) *
                       Eigen::AngleAxisd(-deg2rad(pitch_deg), Vec3::UnitY()))
                          .toRotationMatrix();
    t.rotation = turn * t.rotation;
    return t;
  }
};

struct SceneConfig {
  std::vector<PartConfig> parts;
  SceneCamera camera;
  double rate = 15.0;       // Hz
  double duration = 60.0;   // s
  double jitter_mm = 0.0;   // Gaussian depth noise sigma
  double quantization_mm = 1.0;  // 0 disables
  bool clip_to_operating_range = true;
  double assembly_yaw_deg = 0.0;  // seating direction, about the vertical axis
  Vec3 assembly_pivot = Vec3::Zero();
  std::uint64_t seed = 1;

  void validate() const {
    if (parts.empty()) throw ValidationError("scene: no body parts");
    for (const auto& p : parts) {
      if (!(p.size.array() >= 0.0).all() || !p.size.allFinite())
        throw ValidationError("part '" + p.name + "': sizes must be non-negative");
      p.breathing.validate(p.name);
    }
    if (!(rate > 0.0)) throw ValidationError("scene: camera rate must be positive");
    if (!(duration > 0.0)) throw ValidationError("scene: duration must be positive");
    if (!(jitter_mm >= 0.0) || !(quantization_mm >= 0.0))
      throw ValidationError("scene: jitter and quantization must be non-negative");
    if (camera.width <= 0 || camera.height <= 0 || !(camera.fov_deg > 0.0 && camera.fov_deg < 180.0))
      throw ValidationError("scene: invalid camera size or field of view");
  }

  std::size_t frame_count() const { return static_cast<std::size_t>(std::floor(duration * rate + 1e-9)) + 1; }
};

struct RayHit {
  double t = std::numeric_limits<double>::infinity();
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::Zero();  // outward, radar coordinates
  int part = -1;
};

// Analytic part with its pose resolved.
class ScenePart {
 public:
  ScenePart() = default;
  ScenePart(PartConfig cfg, const Mat3& assembly_rotation, const Vec3& pivot) : cfg_(std::move(cfg)) {
    const Mat3 local = (Eigen::AngleAxisd(deg2rad(cfg_.orientation_deg.x()), Vec3::UnitZ()) *
                        Eigen::AngleAxisd(deg2rad(cfg_.orientation_deg.y()), Vec3::UnitY()) *
                        Eigen::AngleAxisd(deg2rad(cfg_.orientation_deg.z()), Vec3::UnitX()))
                           .toRotationMatrix();
    rotation_ = assembly_rotation * local;
    origin_ = assembly_rotation * (cfg_.position - pivot) + pivot;
  }

  const PartConfig& config() const { return cfg_; }
  const Mat3& rotation() const { return rotation_; }
  const Vec3& origin() const { return origin_; }

  Vec3 to_local(const Vec3& p) const { return rotation_.transpose() * (p - origin_); }
  Vec3 to_world(const Vec3& p) const { return rotation_ * p + origin_; }

  // Front point in local coordinates (reference of the breathing taper).
  Vec3 local_reference() const {
    switch (cfg_.shape) {
      case Shape::ellipsoid: return {-cfg_.size.x(), 0.0, 0.0};
      case Shape::cylinder: return {-cfg_.size.x(), 0.0, 0.0};
      case Shape::plane: return Vec3::Zero();
    }
    return Vec3::Zero();
  }
  Vec3 reference_point() const { return to_world(local_reference()); }
  Vec3 reference_normal() const { return rotation_ * Vec3(-1.0, 0.0, 0.0); }

  // Local axis-aligned half extents, inflated by the breathing peak.
  Vec3 half_extent() const {
    const double pad = cfg_.breathing.peak();
    switch (cfg_.shape) {
      case Shape::ellipsoid: return cfg_.size + Vec3::Constant(pad);
      case Shape::cylinder:
        return Vec3(cfg_.size.x() + pad, cfg_.size.x() + pad, 0.5 * cfg_.size.z() + pad);
      case Shape::plane: return Vec3(pad, 0.5 * cfg_.size.y(), 0.5 * cfg_.size.z());
    }
    return Vec3::Zero();
  }

  std::array<Vec3, 8> world_box() const {
    const Vec3 h = half_extent();
    std::array<Vec3, 8> c;
    for (int i = 0; i < 8; ++i)
      c[static_cast<std::size_t>(i)] =
          to_world(Vec3((i & 1 ? 1 : -1) * h.x(), (i & 2 ? 1 : -1) * h.y(), (i & 4 ? 1 : -1) * h.z()));
    return c;
  }

  double taper(const Vec3& local_point) const {
    const double s = cfg_.breathing.taper_sigma;
    if (s <= 0.0) return 1.0;
    return std::exp(-(local_point - local_reference()).squaredNorm() / (2.0 * s * s));
  }

  // Nearest front-facing intersection with the displaced surface. The
  // displaced surface is taken as the tangent plane at the undisplaced hit,
  // offset by the local displacement (exact for flat parts, first order in
  // the displacement otherwise).
  std::optional<RayHit> intersect(const Vec3& origin, const Vec3& dir, double t) const {
    const Vec3 o = to_local(origin);
    const Vec3 d = rotation_.transpose() * dir;
    std::optional<std::pair<double, Vec3>> hit;  // (ray parameter, local normal)
    switch (cfg_.shape) {
      case Shape::ellipsoid: hit = hit_ellipsoid(o, d); break;
      case Shape::cylinder: hit = hit_cylinder(o, d); break;
      case Shape::plane: hit = hit_plane(o, d); break;
    }
    if (!hit) return std::nullopt;
    const auto& [t0, n_local] = *hit;
    const double cosine = n_local.dot(d);
    if (!(cosine < 0.0)) return std::nullopt;
    const Vec3 x0 = o + t0 * d;
    const double delta = cfg_.breathing.value(t) * taper(x0);
    const double t1 = t0 + delta / cosine;
    if (!(t1 > 0.0)) return std::nullopt;
    RayHit out;
    out.t = t1;
    out.point = origin + t1 * dir;
    out.normal = rotation_ * n_local;
    return out;
  }

 private:
  std::optional<std::pair<double, Vec3>> hit_ellipsoid(const Vec3& o, const Vec3& d) const {
    const Vec3 inv = cfg_.size.cwiseInverse();
    const Vec3 os = o.cwiseProduct(inv), ds = d.cwiseProduct(inv);
    const double a = ds.squaredNorm(), b = 2.0 * os.dot(ds), c = os.squaredNorm() - 1.0;
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0 || a == 0.0) return std::nullopt;
    const double t = (-b - std::sqrt(disc)) / (2.0 * a);
    if (!(t > 0.0)) return std::nullopt;
    const Vec3 x = o + t * d;
    const Vec3 n = x.cwiseProduct(inv).cwiseProduct(inv).normalized();
    return std::make_pair(t, n);
  }

  std::optional<std::pair<double, Vec3>> hit_cylinder(const Vec3& o, const Vec3& d) const {
    const double r = cfg_.size.x(), h = 0.5 * cfg_.size.z();
    const double a = d.x() * d.x() + d.y() * d.y();
    if (a == 0.0) return std::nullopt;
    const double b = 2.0 * (o.x() * d.x() + o.y() * d.y());
    const double c = o.x() * o.x() + o.y() * o.y() - r * r;
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return std::nullopt;
    const double t = (-b - std::sqrt(disc)) / (2.0 * a);
    if (!(t > 0.0)) return std::nullopt;
    const Vec3 x = o + t * d;
    if (std::abs(x.z()) > h) return std::nullopt;
    return std::make_pair(t, Vec3(x.x(), x.y(), 0.0).normalized());
  }

  std::optional<std::pair<double, Vec3>> hit_plane(const Vec3& o, const Vec3& d) const {
    if (!(d.x() > 0.0)) return std::nullopt;
    const double t = -o.x() / d.x();
    if (!(t > 0.0)) return std::nullopt;
    const Vec3 x = o + t * d;
    if (std::abs(x.y()) > 0.5 * cfg_.size.y() || std::abs(x.z()) > 0.5 * cfg_.size.z()) return std::nullopt;
    return std::make_pair(t, Vec3(-1.0, 0.0, 0.0));
  }

  PartConfig cfg_;
  Mat3 rotation_ = Mat3::Identity();
  Vec3 origin_ = Vec3::Zero();
};

struct Scene {
  SceneConfig config;
  std::vector<ScenePart> parts;
  Warnings warnings;

  // Nearest intersection over all parts.
  std::optional<RayHit> intersect(const Vec3& origin, const Vec3& dir, double t) const {
    std::optional<RayHit> best;
    for (std::size_t i = 0; i < parts.size(); ++i)
      if (auto h = parts[i].intersect(origin, dir, t); h && (!best || h->t < best->t)) {
        best = h;
        best->part = static_cast<int>(i);
      }
    return best;
  }
};

// Resolves poses, loads recorded traces and checks the configuration.
// Overlapping parts only raise a warning.
inline Scene build_scene(SceneConfig config, const std::filesystem::path& base_dir = {}) {
  for (auto& p : config.parts) {
    auto& b = p.breathing;
    if (b.waveform == Breathing::Waveform::trace && b.trace_t.empty()) {
      if (b.trace_file.empty()) throw ValidationError("part '" + p.name + "': trace waveform without samples or file");
      std::filesystem::path f = b.trace_file;
      if (f.is_relative() && !base_dir.empty()) f = base_dir / f;
      std::tie(b.trace_t, b.trace_d) = read_trace_csv(f);
    }
  }
  config.validate();
  Scene scene;
  const Mat3 assembly = Eigen::AngleAxisd(deg2rad(config.assembly_yaw_deg), Vec3::UnitZ()).toRotationMatrix();
  for (const auto& p : config.parts) scene.parts.emplace_back(p, assembly, config.assembly_pivot);
  scene.config = std::move(config);

  // world-space bounding boxes for the overlap check
  std::vector<std::pair<Vec3, Vec3>> boxes;
  for (const auto& part : scene.parts) {
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity()), hi = -lo;
    for (const auto& c : part.world_box()) {
      lo = lo.cwiseMin(c);
      hi = hi.cwiseMax(c);
    }
    boxes.emplace_back(lo, hi);
  }
  for (std::size_t i = 0; i < boxes.size(); ++i)
    for (std::size_t j = i + 1; j < boxes.size(); ++j)
      if ((boxes[i].first.array() < boxes[j].second.array()).all() &&
          (boxes[j].first.array() < boxes[i].second.array()).all())
        scene.warnings.push_back("parts '" + scene.parts[i].config().name + "' and '" +
                                 scene.parts[j].config().name + "' overlap");
  return scene;
}

namespace detail {

inline PixelWindow projected_box(const ScenePart& part, const ExtrinsicTransform& extr, const CameraIntrinsics& in,
                                 int width, int height) {
  double u0 = std::numeric_limits<double>::infinity(), v0 = u0, u1 = -u0, v1 = -u0;
  for (const auto& c : part.world_box()) {
    const Vec3 p = extr.apply_inverse(c);
    if (!(p.z() > 1e-6)) return {0, 0, width, height};  // box straddles the camera plane
    const double u = in.fx * p.x() / p.z() + in.cx, v = in.fy * p.y() / p.z() + in.cy;
    u0 = std::min(u0, u);
    u1 = std::max(u1, u);
    v0 = std::min(v0, v);
    v1 = std::max(v1, v);
  }
  auto clampi = [](double x, int lo, int hi) {
    return static_cast<int>(std::clamp(x, static_cast<double>(lo), static_cast<double>(hi)));
  };
  return {clampi(std::floor(u0) - 1, 0, width), clampi(std::floor(v0) - 1, 0, height),
          clampi(std::ceil(u1) + 2, 0, width), clampi(std::ceil(v1) + 2, 0, height)};
}

}  // namespace detail

// Depth image of the scene at time t. frame_index seeds the jitter stream.
inline DepthFrame render_depth(const Scene& scene, double t, std::size_t frame_index = 0) {
  const auto& cfg = scene.config;
  const auto& cam = cfg.camera;
  const auto intr = cam.intrinsics();
  const auto extr = cam.extrinsics();
  DepthFrame frame(cam.width, cam.height, t, intr);

  std::vector<PixelWindow> boxes;
  for (const auto& p : scene.parts) boxes.push_back(detail::projected_box(p, extr, intr, cam.width, cam.height));

  std::seed_seq sseq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                     static_cast<std::uint32_t>(frame_index), static_cast<std::uint32_t>(frame_index >> 32)};
  std::mt19937_64 rng(sseq);
  std::normal_distribution<double> jitter(0.0, cfg.jitter_mm > 0.0 ? cfg.jitter_mm : 1.0);

  const Vec3 origin = extr.camera_origin();
  std::size_t visible = 0;
  for (int v = 0; v < cam.height; ++v)
    for (int u = 0; u < cam.width; ++u) {
      const Vec3 ray_cam((u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0);
      const Vec3 dir = extr.rotate(ray_cam.normalized());
      std::optional<RayHit> best;
      for (std::size_t i = 0; i < scene.parts.size(); ++i) {
        const auto& b = boxes[i];
        if (u < b.u0 || u >= b.u1 || v < b.v0 || v >= b.v1) continue;
        if (auto h = scene.parts[i].intersect(origin, dir, t); h && (!best || h->t < best->t)) best = h;
      }
      if (!best) continue;
      double depth = extr.apply_inverse(best->point).z() * 1e3;
      if (cfg.jitter_mm > 0.0) depth += jitter(rng);
      if (cfg.quantization_mm > 0.0) depth = std::round(depth / cfg.quantization_mm) * cfg.quantization_mm;
      if (!(depth > 0.0)) continue;
      if (cfg.clip_to_operating_range && (depth < min_depth_mm || depth > max_depth_mm)) continue;
      frame.at(u, v) = static_cast<float>(depth);
      ++visible;
    }
  if (visible == 0) throw DomainError("render_depth: no part visible from the camera (empty frame)");
  return frame;
}

// Per-part ground truth sampled at the frame times: the configured normal
// displacement w(t) and the exact change of the radar-origin range of the
// part's reference point.
struct GroundTruth {
  std::vector<double> times;
  std::vector<std::string> part_names;
  std::vector<std::vector<double>> normal_displacement;  // [part][frame], m
  std::vector<std::vector<double>> line_of_sight;        // [part][frame], m
};

inline GroundTruth ground_truth(const Scene& scene, std::span<const double> times, const Vec3& radar_origin = Vec3::Zero()) {
  GroundTruth gt;
  gt.times.assign(times.begin(), times.end());
  for (const auto& part : scene.parts) {
    gt.part_names.push_back(part.config().name);
    std::vector<double> w(times.size()), los(times.size());
    const Vec3 ref = part.reference_point(), n = part.reference_normal();
    const double r0 = (ref - radar_origin).norm();
    for (std::size_t k = 0; k < times.size(); ++k) {
      w[k] = part.config().breathing.value(times[k]);
      los[k] = (ref + w[k] * n - radar_origin).norm() - r0;
    }
    gt.normal_displacement.push_back(std::move(w));
    gt.line_of_sight.push_back(std::move(los));
  }
  return gt;
}

struct RenderedSequence {
  DepthSequence sequence;
  ExtrinsicTransform extrinsics;
  GroundTruth truth;
};

// Frames at t_k = k / rate for k = 0 .. floor(duration * rate).
inline RenderedSequence render_sequence(const Scene& scene) {
  const auto& cfg = scene.config;
  const std::size_t n = cfg.frame_count();
  RenderedSequence out;
  out.extrinsics = cfg.camera.extrinsics();
  out.sequence.nominal_rate = cfg.rate;
  out.sequence.frames.resize(n);
  std::vector<double> times(n);
  for (std::size_t k = 0; k < n; ++k) times[k] = static_cast<double>(k) / cfg.rate;
  parallel_for(n, [&](std::size_t k) { out.sequence.frames[k] = render_depth(scene, times[k], k); });
  out.truth = ground_truth(scene, times);
  return out;
}

// Linear resampling of a ground-truth trace onto a uniform grid.
inline std::vector<double> resample_truth(std::span<const double> times, std::span<const double> values, double t0,
                                          double rate, std::size_t n) {
  std::vector<double> out(n);
  std::size_t j = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = t0 + static_cast<double>(k) / rate;
    while (j + 2 < times.size() && times[j + 1] < t) ++j;
    const double a = std::clamp((t - times[j]) / (times[j + 1] - times[j]), 0.0, 1.0);
    out[k] = (1.0 - a) * values[j] + a * values[j + 1];
  }
  return out;
}

// ---- presets ---------------------------------------------------------------

// Fronto-parallel plate whose front face sits at `range` on boresight.
inline SceneConfig plate_scene(double range = 1.0, double width = 0.3, double height = 0.3, double amplitude = 0.0025,
                               double frequency = 0.25) {
  SceneConfig s;
  PartConfig p;
  p.name = "plate";
  p.shape = Shape::plane;
  p.size = Vec3(0.0, width, height);
  p.position = Vec3(range, 0.0, 0.0);
  p.breathing.amplitude = amplitude;
  p.breathing.frequency = frequency;
  s.parts.push_back(p);
  s.assembly_pivot = p.position;
  return s;
}

// Seated subject facing the radar: torso ellipsoid with its front at `range`
// and two vertical arm cylinders at +/-25 degrees bearing.
inline SceneConfig torso_scene(double range = 1.0, double amplitude = 0.0025, double frequency = 0.25) {
  SceneConfig s;
  PartConfig torso;
  torso.name = "torso";
  torso.shape = Shape::ellipsoid;
  torso.size = Vec3(0.15, 0.25, 0.35);
  torso.position = Vec3(range + torso.size.x(), 0.0, 0.0);
  torso.breathing.amplitude = amplitude;
  torso.breathing.frequency = frequency;
  torso.breathing.taper_sigma = 0.15;
  s.parts.push_back(torso);
  for (int side : {-1, 1}) {
    PartConfig arm;
    arm.name = side < 0 ? "arm_right" : "arm_left";
    arm.shape = Shape::cylinder;
    arm.size = Vec3(0.05, 0.0, 0.6);
    const double bearing = deg2rad(25.0 * side);
    const double r = range + 0.1;
    arm.position = Vec3(r * std::cos(bearing), r * std::sin(bearing), -0.05);
    arm.breathing.amplitude = 0.2 * amplitude;
    arm.breathing.frequency = frequency;
    s.parts.push_back(arm);
  }
  s.assembly_pivot = torso.position;
  return s;
}

// ---- JSON ------------------------------------------------------------------

inline Shape shape_from_string(const std::string& s) {
  if (s == "ellipsoid") return Shape::ellipsoid;
  if (s == "cylinder") return Shape::cylinder;
  if (s == "plane") return Shape::plane;
  throw ValidationError("unknown part shape '" + s + "'");
}

inline std::string to_string(Shape s) {
  switch (s) {
    case Shape::ellipsoid: return "ellipsoid";
    case Shape::cylinder: return "cylinder";
    case Shape::plane: return "plane";
  }
  return "?";
}

namespace detail {
inline Vec3 vec3_from(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }
inline nlohmann::json vec3_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }
}  // namespace detail

inline SceneConfig scene_from_json(const nlohmann::json& j) {
  SceneConfig s;
  try {
    s.rate = j.value("rate_hz", s.rate);
    s.duration = j.value("duration_s", s.duration);
    s.seed = j.value("seed", s.seed);
    if (j.contains("noise")) {
      const auto& n = j.at("noise");
      s.jitter_mm = n.value("jitter_mm", s.jitter_mm);
      s.quantization_mm = n.value("quantization_mm", s.quantization_mm);
    }
    s.clip_to_operating_range = j.value("clip_to_operating_range", s.clip_to_operating_range);
    if (j.contains("assembly")) {
      const auto& a = j.at("assembly");
      s.assembly_yaw_deg = a.value("yaw_deg", 0.0);
      if (a.contains("pivot")) s.assembly_pivot = detail::vec3_from(a.at("pivot"));
    }
    if (j.contains("camera")) {
      const auto& c = j.at("camera");
      s.camera.width = c.value("width", s.camera.width);
      s.camera.height = c.value("height", s.camera.height);
      s.camera.fov_deg = c.value("fov_deg", s.camera.fov_deg);
      s.camera.yaw_deg = c.value("yaw_deg", 0.0);
      s.camera.pitch_deg = c.value("pitch_deg", 0.0);
      if (c.contains("position")) s.camera.position = detail::vec3_from(c.at("position"));
    }
    for (const auto& pj : j.at("parts")) {
      PartConfig p;
      p.name = pj.value("name", "part" + std::to_string(s.parts.size()));
      p.shape = shape_from_string(pj.at("shape").get<std::string>());
      p.size = detail::vec3_from(pj.at("size"));
      p.position = detail::vec3_from(pj.at("position"));
      if (pj.contains("orientation_deg")) p.orientation_deg = detail::vec3_from(pj.at("orientation_deg"));
      if (pj.contains("breathing")) {
        const auto& b = pj.at("breathing");
        const auto wf = b.value("waveform", std::string("sinusoid"));
        if (wf == "sinusoid") {
          p.breathing.waveform = Breathing::Waveform::sinusoid;
        } else if (wf == "trace") {
          p.breathing.waveform = Breathing::Waveform::trace;
          p.breathing.trace_file = b.value("trace_file", std::string());
        } else {
          throw ValidationError("part '" + p.name + "': unknown waveform '" + wf + "'");
        }
        p.breathing.amplitude = b.value("amplitude_m", 0.0);
        p.breathing.frequency = b.value("frequency_hz", 0.25);
        p.breathing.phase = b.value("phase_rad", 0.0);
        p.breathing.taper_sigma = b.value("taper_sigma_m", 0.0);
      }
      s.parts.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("scene JSON: ") + e.what());
  }
  return s;
}

inline nlohmann::json to_json(const SceneConfig& s) {
  nlohmann::json j;
  j["rate_hz"] = s.rate;
  j["duration_s"] = s.duration;
  j["seed"] = s.seed;
  j["noise"] = {{"jitter_mm", s.jitter_mm}, {"quantization_mm", s.quantization_mm}};
  j["clip_to_operating_range"] = s.clip_to_operating_range;
  j["assembly"] = {{"yaw_deg", s.assembly_yaw_deg}, {"pivot", detail::vec3_json(s.assembly_pivot)}};
  j["camera"] = {{"width", s.camera.width},     {"height", s.camera.height},
                 {"fov_deg", s.camera.fov_deg}, {"yaw_deg", s.camera.yaw_deg},
                 {"pitch_deg", s.camera.pitch_deg}, {"position", detail::vec3_json(s.camera.position)}};
  j["parts"] = nlohmann::json::array();
  for (const auto& p : s.parts) {
    nlohmann::json b = {{"amplitude_m", p.breathing.amplitude},
                        {"frequency_hz", p.breathing.frequency},
                        {"phase_rad", p.breathing.phase},
                        {"taper_sigma_m", p.breathing.taper_sigma}};
    if (p.breathing.waveform == Breathing::Waveform::trace) {
      b["waveform"] = "trace";
      b["trace_file"] = p.breathing.trace_file;
    } else {
      b["waveform"] = "sinusoid";
    }
    j["parts"].push_back({{"name", p.name},
                          {"shape", to_string(p.shape)},
                          {"size", detail::vec3_json(p.size)},
                          {"position", detail::vec3_json(p.position)},
                          {"orientation_deg", detail::vec3_json(p.orientation_deg)},
                          {"breathing", b}});
  }
  return j;
}

inline SceneConfig load_scene_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open scene config " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("scene config " + path.string() + ": " + e.what());
  }
  return scene_from_json(j);
}

}  // namespace rps
