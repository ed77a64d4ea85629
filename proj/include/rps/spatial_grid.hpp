#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <vector>

#include "rps/common.hpp"

namespace rps {

// Uniform hash grid over a fixed point set for radius queries.
class SpatialGrid {
 public:
  SpatialGrid(const std::vector<Vec3>& points, double cell_size)
      : points_(&points), cell_(cell_size > 0.0 ? cell_size : 1.0) {
    for (std::size_t i = 0; i < points.size(); ++i) cells_[key(cell_of(points[i]))].push_back(i);
  }

  // Calls fn(index, distance) for every point strictly closer than radius.
  template <typename Fn>
  void for_each_within(const Vec3& center, double radius, Fn&& fn) const {
    const auto lo = cell_of(center - Vec3::Constant(radius));
    const auto hi = cell_of(center + Vec3::Constant(radius));
    for (auto x = lo[0]; x <= hi[0]; ++x)
      for (auto y = lo[1]; y <= hi[1]; ++y)
        for (auto z = lo[2]; z <= hi[2]; ++z) {
          auto it = cells_.find(key({x, y, z}));
          if (it == cells_.end()) continue;
          for (auto i : it->second) {
            const double d = ((*points_)[i] - center).norm();
            if (d < radius) fn(i, d);
          }
        }
  }

 private:
  using Cell = std::array<std::int64_t, 3>;
  Cell cell_of(const Vec3& p) const {
    return {static_cast<std::int64_t>(std::floor(p.x() / cell_)), static_cast<std::int64_t>(std::floor(p.y() / cell_)),
            static_cast<std::int64_t>(std::floor(p.z() / cell_))};
  }
  static std::uint64_t key(const Cell& c) {
    const auto h = [](std::int64_t v) { return static_cast<std::uint64_t>(v) & 0x1fffffULL; };
    return (h(c[0]) << 42) | (h(c[1]) << 21) | h(c[2]);
  }

  const std::vector<Vec3>* points_;
  double cell_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

}  // namespace rps
