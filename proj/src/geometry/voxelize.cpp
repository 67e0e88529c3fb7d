#include <algorithm>
#include <cmath>
#include <optional>

#include "windmil/error.hpp"
#include "windmil/geometry/sdf.hpp"

namespace windmil::geometry {

namespace {

constexpr int kMaxJitters = 3;
constexpr double kJitterScale = 1e-6;

struct Hit {
  bool degenerate = false;
  std::optional<double> x;
};

// Edge function of P against the directed edge (a, b) in the yz-plane. Shared
// edges are always evaluated in ascending vertex-index order and sign-flipped,
// so two faces sharing an edge see exactly opposite values.
double edge_function(const TriangleMesh& mesh, std::uint32_t ia, std::uint32_t ib, double py,
                     double pz) {
  const bool flip = ia > ib;
  if (flip) std::swap(ia, ib);
  const Vec3& a = mesh.vertices[ia];
  const Vec3& b = mesh.vertices[ib];
  const double e = (b.y() - a.y()) * (pz - a.z()) - (b.z() - a.z()) * (py - a.y());
  return flip ? -e : e;
}

Hit intersect_x_ray(const TriangleMesh& mesh, const Face& f, double py, double pz) {
  const double e0 = edge_function(mesh, f[1], f[2], py, pz);  // opposite vertex 0
  const double e1 = edge_function(mesh, f[2], f[0], py, pz);
  const double e2 = edge_function(mesh, f[0], f[1], py, pz);
  const bool has_neg = e0 < 0 || e1 < 0 || e2 < 0;
  const bool has_pos = e0 > 0 || e1 > 0 || e2 > 0;
  if (has_neg && has_pos) return {};
  if (e0 == 0.0 || e1 == 0.0 || e2 == 0.0) return {true, std::nullopt};
  const double sum = e0 + e1 + e2;
  const double x = (e0 * mesh.vertices[f[0]].x() + e1 * mesh.vertices[f[1]].x() +
                    e2 * mesh.vertices[f[2]].x()) /
                   sum;
  return {false, x};
}

}  // namespace

OccupancyGrid voxelize(const TriangleMesh& mesh, const GridSpec& spec) {
  validate(spec);
  validate(mesh);
  if (!is_watertight(mesh)) {
    throw GeometryError("mesh is not watertight; ray parity is undefined");
  }
  require_contains(spec, bounding_box(mesh), 2);

  const int nx = spec.dims[0];
  const int ny = spec.dims[1];
  const int nz = spec.dims[2];

  // Bin faces by the (j, k) ray rows their yz-bounds overlap.
  std::vector<std::vector<std::uint32_t>> rows(static_cast<std::size_t>(ny) * nz);
  const double pad = (kMaxJitters + 1) * kJitterScale;
  for (std::uint32_t fi = 0; fi < mesh.faces.size(); ++fi) {
    const Face& f = mesh.faces[fi];
    double ylo = mesh.vertices[f[0]].y(), yhi = ylo;
    double zlo = mesh.vertices[f[0]].z(), zhi = zlo;
    for (int c = 1; c < 3; ++c) {
      ylo = std::min(ylo, mesh.vertices[f[c]].y());
      yhi = std::max(yhi, mesh.vertices[f[c]].y());
      zlo = std::min(zlo, mesh.vertices[f[c]].z());
      zhi = std::max(zhi, mesh.vertices[f[c]].z());
    }
    const int j0 = std::max(0, static_cast<int>(std::floor((ylo - spec.origin.y()) / spec.spacing - pad)));
    const int j1 = std::min(ny - 1, static_cast<int>(std::ceil((yhi - spec.origin.y()) / spec.spacing + pad)));
    const int k0 = std::max(0, static_cast<int>(std::floor((zlo - spec.origin.z()) / spec.spacing - pad)));
    const int k1 = std::min(nz - 1, static_cast<int>(std::ceil((zhi - spec.origin.z()) / spec.spacing + pad)));
    for (int k = k0; k <= k1; ++k)
      for (int j = j0; j <= j1; ++j) rows[static_cast<std::size_t>(k) * ny + j].push_back(fi);
  }

  OccupancyGrid occ(spec, 0);
  std::vector<double> crossings;
  for (int k = 0; k < nz; ++k) {
    for (int j = 0; j < ny; ++j) {
      const auto& candidates = rows[static_cast<std::size_t>(k) * ny + j];
      if (candidates.empty()) continue;
      const Vec3 p = spec.point(0, j, k);
      bool resolved = false;
      for (int attempt = 0; attempt <= kMaxJitters && !resolved; ++attempt) {
        const double jy = attempt * kJitterScale * spec.spacing;
        const double jz = attempt * 0.7 * kJitterScale * spec.spacing;
        crossings.clear();
        resolved = true;
        for (std::uint32_t fi : candidates) {
          const Hit hit = intersect_x_ray(mesh, mesh.faces[fi], p.y() + jy, p.z() + jz);
          if (hit.degenerate) {
            resolved = false;
            break;
          }
          if (hit.x) crossings.push_back(*hit.x);
        }
      }
      if (!resolved) {
        throw GeometryError("ray at row (" + std::to_string(j) + ", " + std::to_string(k) +
                            ") still grazes the surface after jittering");
      }
      if (crossings.size() % 2 != 0) {
        throw GeometryError("odd crossing count on a full ray; mesh is not closed");
      }
      std::sort(crossings.begin(), crossings.end());
      // Inside iff an odd number of crossings lie strictly ahead along +x.
      std::size_t ahead = crossings.size();
      std::size_t c = 0;
      for (int i = 0; i < nx; ++i) {
        const double x = spec.origin.x() + spec.spacing * i;
        while (c < crossings.size() && crossings[c] <= x) ++c;
        ahead = crossings.size() - c;
        occ.at(i, j, k) = static_cast<std::uint8_t>(ahead % 2);
      }
    }
  }
  return occ;
}

}  // namespace windmil::geometry
