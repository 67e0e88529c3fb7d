#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "windmil/geometry/mesh.hpp"

namespace windmil::geometry {

/// Regular sample lattice: sample (i, j, k) sits at origin + spacing * (i, j, k).
/// "Cells" in the voxel and SDF code refer to these sample points.
struct GridSpec {
  Vec3 origin = Vec3::Zero();
  double spacing = 1.0;
  std::array<int, 3> dims{2, 2, 2};

  std::size_t size() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * dims[1] + j) * dims[0] + i;
  }
  Vec3 point(int i, int j, int k) const {
    return origin + spacing * Vec3(i, j, k);
  }
  Vec3 upper() const {
    return origin + spacing * Vec3(dims[0] - 1, dims[1] - 1, dims[2] - 1);
  }
  double diagonal() const { return (upper() - origin).norm(); }

  bool operator==(const GridSpec&) const = default;
};

/// Throws DomainError when spacing <= 0 or any dim < 2.
void validate(const GridSpec& spec);

/// Throws BoundsError unless `box` lies inside the grid with at least
/// `margin_cells` samples of clearance on every side.
void require_contains(const GridSpec& spec, const Aabb& box, int margin_cells = 2);

/// Cubic grid of `resolution` samples per axis, centered on the box center,
/// sized so the box fits with `margin_cells` of clearance along its longest axis.
GridSpec fit_grid(const Aabb& box, int resolution, int margin_cells = 3);

template <typename T>
struct ScalarGrid {
  GridSpec spec;
  std::vector<T> values;

  ScalarGrid() = default;
  explicit ScalarGrid(const GridSpec& s, T fill = T{}) : spec(s), values(s.size(), fill) {}

  T& at(int i, int j, int k) { return values[spec.index(i, j, k)]; }
  const T& at(int i, int j, int k) const { return values[spec.index(i, j, k)]; }

  bool operator==(const ScalarGrid&) const = default;
};

/// Inside (1) / outside (0) per sample.
using OccupancyGrid = ScalarGrid<std::uint8_t>;

/// Signed distance in meters: negative inside, positive outside.
using SDFField = ScalarGrid<double>;

}  // namespace windmil::geometry
