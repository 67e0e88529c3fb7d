#pragma once

#include <vector>

#include "windmil/geometry/grid.hpp"
#include "windmil/geometry/mesh.hpp"

namespace windmil::geometry {

/// Extracts the iso-surface of `sdf` with the classic 256-case table.
///
/// Vertices are placed by linear interpolation along crossed cell edges and
/// shared between neighbouring cells, so the result is closed whenever the
/// surface stays clear of the grid boundary. A sample exactly at `iso` yields
/// a single vertex at that sample; triangles that collapse because of it are
/// dropped. Faces are wound so normals point toward increasing values.
///
/// Throws EmptySurfaceError when the field never crosses `iso`.
TriangleMesh marching_cubes(const SDFField& sdf, double iso = 0.0);

/// Uniform-weight (umbrella) Laplacian relaxation, applied simultaneously to
/// all vertices: v += lambda * (mean(1-ring) - v). Isolated vertices stay put.
TriangleMesh laplacian_smooth(const TriangleMesh& mesh, int iterations, double lambda);

/// Rotation about the vertical (y) axis through `pivot`:
/// x' = x cos t - z sin t,  z' = x sin t + z cos t  (relative to the pivot).
TriangleMesh rotate_about_vertical(const TriangleMesh& mesh, double angle_deg,
                                   const Vec3& pivot = Vec3::Zero());

/// Angle-weighted average of incident face normals, renormalized. Zero-area
/// faces are skipped; a vertex with no usable face gets the zero vector.
std::vector<Vec3> compute_vertex_normals(const TriangleMesh& mesh);

/// Sorted 1-ring neighbour lists derived from the faces.
std::vector<std::vector<std::uint32_t>> vertex_neighbours(const TriangleMesh& mesh);

}  // namespace windmil::geometry
