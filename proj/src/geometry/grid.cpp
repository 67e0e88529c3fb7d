#include "windmil/geometry/grid.hpp"

#include <cmath>
#include <string>

#include "windmil/error.hpp"

namespace windmil::geometry {

void validate(const GridSpec& spec) {
  if (!(spec.spacing > 0.0) || !std::isfinite(spec.spacing)) {
    throw DomainError("grid spacing must be positive");
  }
  for (int d : spec.dims) {
    if (d < 2) throw DomainError("grid dims must be >= 2 per axis");
  }
  if (!spec.origin.allFinite()) throw DomainError("grid origin must be finite");
}

void require_contains(const GridSpec& spec, const Aabb& box, int margin_cells) {
  const double margin = margin_cells * spec.spacing;
  const Vec3 lo = spec.origin.array() + margin;
  const Vec3 hi = spec.upper().array() - margin;
  for (int a = 0; a < 3; ++a) {
    if (box.min[a] < lo[a] || box.max[a] > hi[a]) {
      throw BoundsError("mesh extends outside the grid (axis " + std::to_string(a) +
                        ", margin " + std::to_string(margin_cells) + " cells)");
    }
  }
}

GridSpec fit_grid(const Aabb& box, int resolution, int margin_cells) {
  if (resolution < 2 * margin_cells + 3) {
    throw DomainError("grid resolution too small for the requested margin");
  }
  const double longest = box.extent().maxCoeff();
  if (!(longest > 0.0)) throw DomainError("cannot fit a grid to an empty box");
  GridSpec spec;
  // One extra cell on each side so the margin check holds after rounding.
  spec.spacing = longest / static_cast<double>(resolution - 1 - 2 * (margin_cells + 1));
  spec.dims = {resolution, resolution, resolution};
  const Vec3 center = 0.5 * (box.min + box.max);
  spec.origin = center.array() - 0.5 * spec.spacing * (resolution - 1);
  return spec;
}

}  // namespace windmil::geometry
