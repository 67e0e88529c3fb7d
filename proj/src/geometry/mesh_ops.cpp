#include <algorithm>
#include <cmath>
#include <numbers>

#include "windmil/error.hpp"
#include "windmil/geometry/surface.hpp"

namespace windmil::geometry {

std::vector<std::vector<std::uint32_t>> vertex_neighbours(const TriangleMesh& mesh) {
  std::vector<std::vector<std::uint32_t>> ring(mesh.vertices.size());
  for (const Face& f : mesh.faces) {
    for (int e = 0; e < 3; ++e) {
      ring[f[e]].push_back(f[(e + 1) % 3]);
      ring[f[e]].push_back(f[(e + 2) % 3]);
    }
  }
  for (auto& r : ring) {
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
  }
  return ring;
}

TriangleMesh laplacian_smooth(const TriangleMesh& mesh, int iterations, double lambda) {
  if (iterations < 0) throw DomainError("smoothing iterations must be >= 0");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw DomainError("smoothing lambda must be in [0, 1]");
  TriangleMesh out = mesh;
  if (iterations == 0 || lambda == 0.0) return out;

  const auto ring = vertex_neighbours(mesh);
  std::vector<Vec3> next(out.vertices.size());
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t v = 0; v < out.vertices.size(); ++v) {
      if (ring[v].empty()) {
        next[v] = out.vertices[v];
        continue;
      }
      Vec3 mean = Vec3::Zero();
      for (std::uint32_t u : ring[v]) mean += out.vertices[u];
      mean /= static_cast<double>(ring[v].size());
      next[v] = out.vertices[v] + lambda * (mean - out.vertices[v]);
    }
    out.vertices.swap(next);
  }
  // Positions moved; stale normals would be wrong.
  out.normals.clear();
  return out;
}

TriangleMesh rotate_about_vertical(const TriangleMesh& mesh, double angle_deg, const Vec3& pivot) {
  TriangleMesh out = mesh;
  if (angle_deg == 0.0) return out;
  const double t = angle_deg * std::numbers::pi / 180.0;
  const double c = std::cos(t);
  const double s = std::sin(t);
  auto rotate = [&](const Vec3& p) {
    return Vec3(p.x() * c - p.z() * s, p.y(), p.x() * s + p.z() * c);
  };
  for (Vec3& v : out.vertices) v = pivot + rotate(v - pivot);
  for (Vec3& n : out.normals) n = rotate(n);
  return out;
}

std::vector<Vec3> compute_vertex_normals(const TriangleMesh& mesh) {
  std::vector<Vec3> normals(mesh.vertices.size(), Vec3::Zero());
  for (const Face& f : mesh.faces) {
    const Vec3& a = mesh.vertices[f[0]];
    const Vec3& b = mesh.vertices[f[1]];
    const Vec3& c = mesh.vertices[f[2]];
    const Vec3 n = (b - a).cross(c - a);
    const double len = n.norm();
    if (!(len > 0.0)) continue;
    const Vec3 unit = n / len;
    const std::array<Vec3, 3> p{a, b, c};
    for (int corner = 0; corner < 3; ++corner) {
      const Vec3 e1 = p[(corner + 1) % 3] - p[corner];
      const Vec3 e2 = p[(corner + 2) % 3] - p[corner];
      const double angle = std::atan2(e1.cross(e2).norm(), e1.dot(e2));
      normals[f[corner]] += angle * unit;
    }
  }
  for (Vec3& n : normals) {
    const double len = n.norm();
    if (len > 0.0) n /= len;
  }
  return normals;
}

}  // namespace windmil::geometry
