#include <unordered_map>

#include "marching_cubes_tables.hpp"
#include "windmil/error.hpp"
#include "windmil/geometry/surface.hpp"

namespace windmil::geometry {

TriangleMesh marching_cubes(const SDFField& sdf, double iso) {
  const GridSpec& spec = sdf.spec;
  validate(spec);
  if (sdf.values.size() != spec.size()) throw ShapeError("field size does not match grid");
  bool below = false;
  bool above = false;
  for (double v : sdf.values) {
    below |= v < iso;
    above |= v > iso;
  }
  if (!below || !above) throw EmptySurfaceError("field has no crossing of the iso value");

  const int nx = spec.dims[0];
  const int ny = spec.dims[1];
  const int nz = spec.dims[2];

  TriangleMesh mesh;
  // Key: 4 * sample index + slot, slot 0..2 = edge along that axis from the
  // sample, slot 3 = the sample itself (value exactly at iso).
  std::unordered_map<std::uint64_t, std::uint32_t> vertex_of;
  vertex_of.reserve(spec.size() / 8);

  auto vertex_on_edge = [&](int i, int j, int k, int ca, int cb) -> std::uint32_t {
    std::array<int, 3> a{i + detail::kCorner[ca][0], j + detail::kCorner[ca][1],
                         k + detail::kCorner[ca][2]};
    std::array<int, 3> b{i + detail::kCorner[cb][0], j + detail::kCorner[cb][1],
                         k + detail::kCorner[cb][2]};
    if (b < a) std::swap(a, b);  // walk every lattice edge in one direction
    const std::size_t ia = spec.index(a[0], a[1], a[2]);
    const std::size_t ib = spec.index(b[0], b[1], b[2]);
    const double va = sdf.values[ia];
    const double vb = sdf.values[ib];

    std::uint64_t key;
    Vec3 pos;
    if (va == iso || vb == iso) {
      const bool at_a = va == iso;
      key = 4 * static_cast<std::uint64_t>(at_a ? ia : ib) + 3;
      pos = at_a ? spec.point(a[0], a[1], a[2]) : spec.point(b[0], b[1], b[2]);
    } else {
      const int axis = a[0] != b[0] ? 0 : (a[1] != b[1] ? 1 : 2);
      key = 4 * static_cast<std::uint64_t>(ia) + axis;
      const double t = (iso - va) / (vb - va);
      const Vec3 pa = spec.point(a[0], a[1], a[2]);
      const Vec3 pb = spec.point(b[0], b[1], b[2]);
      pos = pa + t * (pb - pa);
    }
    auto [it, inserted] = vertex_of.try_emplace(key, static_cast<std::uint32_t>(mesh.vertices.size()));
    if (inserted) mesh.vertices.push_back(pos);
    return it->second;
  };

  for (int k = 0; k + 1 < nz; ++k) {
    for (int j = 0; j + 1 < ny; ++j) {
      for (int i = 0; i + 1 < nx; ++i) {
        std::array<double, 8> v{};
        int cube = 0;
        for (int c = 0; c < 8; ++c) {
          v[c] = sdf.at(i + detail::kCorner[c][0], j + detail::kCorner[c][1],
                        k + detail::kCorner[c][2]);
          if (v[c] < iso) cube |= 1 << c;
        }
        const std::uint16_t edges = detail::kEdgeTable[cube];
        if (edges == 0) continue;
        std::array<std::uint32_t, 12> ev{};
        for (int e = 0; e < 12; ++e) {
          if (edges & (1u << e)) {
            ev[e] = vertex_on_edge(i, j, k, detail::kEdge[e][0], detail::kEdge[e][1]);
          }
        }
        const auto& tris = detail::kTriTable[cube];
        for (int t = 0; t < 16 && tris[t] >= 0; t += 3) {
          const Face f{ev[tris[t]], ev[tris[t + 1]], ev[tris[t + 2]]};
          if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) continue;
          mesh.faces.push_back(f);
        }
      }
    }
  }
  if (mesh.faces.empty()) throw EmptySurfaceError("no triangles extracted");

  // Snapped vertices can lose all their faces; drop them.
  std::vector<std::uint32_t> remap(mesh.vertices.size(), UINT32_MAX);
  for (const Face& f : mesh.faces)
    for (std::uint32_t idx : f) remap[idx] = 0;
  std::uint32_t next = 0;
  for (std::size_t i = 0; i < remap.size(); ++i) {
    if (remap[i] == 0) {
      remap[i] = next;
      mesh.vertices[next++] = mesh.vertices[i];
    }
  }
  if (next != mesh.vertices.size()) {
    mesh.vertices.resize(next);
    for (Face& f : mesh.faces)
      for (std::uint32_t& idx : f) idx = remap[idx];
  }
  return mesh;
}

}  // namespace windmil::geometry
