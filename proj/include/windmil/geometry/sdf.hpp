#pragma once

#include <array>
#include <span>
#include <vector>

#include "windmil/geometry/grid.hpp"
#include "windmil/geometry/mesh.hpp"

namespace windmil::geometry {

/// Ray-parity voxelization. Rays run along +x from every sample; a sample is
/// inside when the ray crosses the surface an odd number of times. Rays that
/// graze an edge or vertex are re-cast from a jittered origin (up to three
/// times) before the mesh is rejected.
///
/// Throws GeometryError for open meshes or unresolvable rays and BoundsError
/// when the mesh is not inside the grid with a two-cell margin.
OccupancyGrid voxelize(const TriangleMesh& mesh, const GridSpec& spec);

/// Exact squared Euclidean distance transform (in cell units) to the nearest
/// sample where `seed` is true. Separable lower-envelope algorithm; samples
/// with no reachable seed get +infinity.
std::vector<double> squared_distance_transform(const GridSpec& spec,
                                               std::span<const std::uint8_t> seed);

/// Signed distance to the inside/outside interface, in meters. The interface
/// sits half a cell from the nearest sample of the opposite class, so
/// |phi| = dist(nearest opposite sample) - spacing / 2.
///
/// Throws DegenerateFieldError when the grid is all inside or all outside.
SDFField occupancy_to_sdf(const OccupancyGrid& occ);

/// Convex weights over the three basis shapes.
struct BarycentricWeights {
  std::array<double, 3> w{1.0, 0.0, 0.0};

  bool operator==(const BarycentricWeights&) const = default;
};

/// Throws DomainError unless every weight is >= 0 and they sum to 1 (1e-12).
void validate_weights(std::span<const double> weights);

/// phi_out = sum_i w_i * phi_i, accumulated in list order.
SDFField interpolate_sdf(std::span<const SDFField> fields, std::span<const double> weights);
SDFField interpolate_sdf(std::span<const SDFField> fields, const BarycentricWeights& weights);

/// Samples an analytic function on the grid.
template <typename F>
SDFField sample_field(const GridSpec& spec, F&& f) {
  SDFField field(spec);
  for (int k = 0; k < spec.dims[2]; ++k)
    for (int j = 0; j < spec.dims[1]; ++j)
      for (int i = 0; i < spec.dims[0]; ++i) field.at(i, j, k) = f(spec.point(i, j, k));
  return field;
}

}  // namespace windmil::geometry
