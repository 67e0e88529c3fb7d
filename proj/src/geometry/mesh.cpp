#include "windmil/geometry/mesh.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <unordered_map>

#include "windmil/error.hpp"

namespace windmil::geometry {

namespace {

std::uint64_t edge_key(std::uint32_t a, std::uint32_t b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

std::unordered_map<std::uint64_t, int> edge_use_counts(const TriangleMesh& mesh) {
  std::unordered_map<std::uint64_t, int> counts;
  counts.reserve(mesh.faces.size() * 2);
  for (const Face& f : mesh.faces) {
    for (int e = 0; e < 3; ++e) ++counts[edge_key(f[e], f[(e + 1) % 3])];
  }
  return counts;
}

// Flips faces so their normals point away from the vertex centroid. Only
// valid for convex solids.
void orient_outward_convex(TriangleMesh& mesh) {
  Vec3 centroid = Vec3::Zero();
  for (const Vec3& v : mesh.vertices) centroid += v;
  centroid /= static_cast<double>(mesh.vertices.size());
  for (Face& f : mesh.faces) {
    const Vec3& a = mesh.vertices[f[0]];
    const Vec3& b = mesh.vertices[f[1]];
    const Vec3& c = mesh.vertices[f[2]];
    const Vec3 n = (b - a).cross(c - a);
    const Vec3 mid = (a + b + c) / 3.0;
    if (n.dot(mid - centroid) < 0.0) std::swap(f[1], f[2]);
  }
}

void add_quad(TriangleMesh& m, std::uint32_t a, std::uint32_t b, std::uint32_t c, std::uint32_t d) {
  m.faces.push_back({a, b, c});
  m.faces.push_back({a, c, d});
}

}  // namespace

void validate(const TriangleMesh& mesh) {
  const auto n = static_cast<std::uint32_t>(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    if (!mesh.vertices[i].allFinite()) {
      throw GeometryError("vertex " + std::to_string(i) + " is not finite");
    }
  }
  for (std::size_t i = 0; i < mesh.faces.size(); ++i) {
    const Face& f = mesh.faces[i];
    if (f[0] >= n || f[1] >= n || f[2] >= n) {
      throw GeometryError("face " + std::to_string(i) + " index out of range");
    }
    if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) {
      throw GeometryError("face " + std::to_string(i) + " repeats a vertex");
    }
  }
  if (!mesh.normals.empty() && mesh.normals.size() != mesh.vertices.size()) {
    throw GeometryError("normal count does not match vertex count");
  }
}

bool is_watertight(const TriangleMesh& mesh) {
  if (mesh.faces.empty()) return false;
  for (const auto& [key, count] : edge_use_counts(mesh)) {
    if (count != 2) return false;
  }
  return true;
}

Aabb bounding_box(const TriangleMesh& mesh) {
  if (mesh.vertices.empty()) throw GeometryError("bounding box of an empty mesh");
  Aabb box{mesh.vertices.front(), mesh.vertices.front()};
  for (const Vec3& v : mesh.vertices) {
    box.min = box.min.cwiseMin(v);
    box.max = box.max.cwiseMax(v);
  }
  return box;
}

double signed_volume(const TriangleMesh& mesh) {
  double six_v = 0.0;
  for (const Face& f : mesh.faces) {
    six_v += mesh.vertices[f[0]].dot(mesh.vertices[f[1]].cross(mesh.vertices[f[2]]));
  }
  return six_v / 6.0;
}

std::size_t edge_count(const TriangleMesh& mesh) { return edge_use_counts(mesh).size(); }

long euler_characteristic(const TriangleMesh& mesh) {
  return static_cast<long>(mesh.vertices.size()) - static_cast<long>(edge_count(mesh)) +
         static_cast<long>(mesh.faces.size());
}

TriangleMesh translated(const TriangleMesh& mesh, const Vec3& offset) {
  TriangleMesh out = mesh;
  for (Vec3& v : out.vertices) v += offset;
  return out;
}

TriangleMesh mirrored_z(const TriangleMesh& mesh) {
  TriangleMesh out = mesh;
  for (Vec3& v : out.vertices) v.z() = -v.z();
  for (Vec3& n : out.normals) n.z() = -n.z();
  for (Face& f : out.faces) std::swap(f[1], f[2]);
  return out;
}

TriangleMesh parse_obj(const std::string& text) {
  TriangleMesh mesh;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      Vec3 v;
      if (!(ls >> v.x() >> v.y() >> v.z())) {
        throw FormatError("obj line " + std::to_string(line_no) + ": malformed vertex");
      }
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<std::uint32_t> poly;
      std::string tok;
      while (ls >> tok) {
        long idx = 0;
        try {
          idx = std::stol(tok.substr(0, tok.find('/')));
        } catch (const std::exception&) {
          throw FormatError("obj line " + std::to_string(line_no) + ": malformed face index");
        }
        if (idx < 0) idx += static_cast<long>(mesh.vertices.size()) + 1;
        if (idx < 1) throw FormatError("obj line " + std::to_string(line_no) + ": bad face index");
        poly.push_back(static_cast<std::uint32_t>(idx - 1));
      }
      if (poly.size() < 3) {
        throw FormatError("obj line " + std::to_string(line_no) + ": face with < 3 vertices");
      }
      for (std::size_t i = 1; i + 1 < poly.size(); ++i) {
        mesh.faces.push_back({poly[0], poly[i], poly[i + 1]});
      }
    }
  }
  validate(mesh);
  return mesh;
}

TriangleMesh read_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_obj(buf.str());
}

void write_obj(const TriangleMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << std::setprecision(17);
  for (const Vec3& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const Vec3& n : mesh.normals) out << "vn " << n.x() << ' ' << n.y() << ' ' << n.z() << '\n';
  const bool with_normals = !mesh.normals.empty();
  for (const Face& f : mesh.faces) {
    out << 'f';
    for (std::uint32_t i : f) {
      out << ' ' << i + 1;
      if (with_normals) out << "//" << i + 1;
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

TriangleMesh make_box(const Vec3& lo, const Vec3& hi) {
  TriangleMesh m;
  for (int i = 0; i < 8; ++i) {
    m.vertices.emplace_back((i & 1) ? hi.x() : lo.x(), (i & 2) ? hi.y() : lo.y(),
                            (i & 4) ? hi.z() : lo.z());
  }
  add_quad(m, 0, 1, 3, 2);  // z = lo
  add_quad(m, 4, 5, 7, 6);  // z = hi
  add_quad(m, 0, 1, 5, 4);  // y = lo
  add_quad(m, 2, 3, 7, 6);  // y = hi
  add_quad(m, 0, 2, 6, 4);  // x = lo
  add_quad(m, 1, 3, 7, 5);  // x = hi
  orient_outward_convex(m);
  return m;
}

TriangleMesh make_icosphere(double radius, int subdivisions, const Vec3& center) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  TriangleMesh m;
  m.vertices = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  for (Vec3& v : m.vertices) v.normalize();
  m.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
             {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
             {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> midpoint;
    auto mid = [&](std::uint32_t a, std::uint32_t b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      m.vertices.push_back((m.vertices[a] + m.vertices[b]).normalized());
      const auto idx = static_cast<std::uint32_t>(m.vertices.size() - 1);
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<Face> faces;
    faces.reserve(m.faces.size() * 4);
    for (const Face& f : m.faces) {
      const std::uint32_t ab = mid(f[0], f[1]);
      const std::uint32_t bc = mid(f[1], f[2]);
      const std::uint32_t ca = mid(f[2], f[0]);
      faces.push_back({f[0], ab, ca});
      faces.push_back({f[1], bc, ab});
      faces.push_back({f[2], ca, bc});
      faces.push_back({ab, bc, ca});
    }
    m.faces = std::move(faces);
  }
  orient_outward_convex(m);
  for (Vec3& v : m.vertices) v = center + radius * v;
  return m;
}

TriangleMesh make_flat_roof(const BuildingDims& dims, double height) {
  return make_box(Vec3(-dims.length / 2, 0.0, -dims.width / 2),
                  Vec3(dims.length / 2, height, dims.width / 2));
}

TriangleMesh make_gable_roof(const BuildingDims& dims, double ridge_height) {
  const double hx = dims.length / 2;
  const double hz = dims.width / 2;
  const double e = dims.eave_height;
  TriangleMesh m;
  // 0-3 ground, 4-7 eave, 8-9 ridge ends.
  m.vertices = {{-hx, 0, -hz}, {hx, 0, -hz}, {hx, 0, hz}, {-hx, 0, hz},
                {-hx, e, -hz}, {hx, e, -hz}, {hx, e, hz}, {-hx, e, hz},
                {-hx, ridge_height, 0}, {hx, ridge_height, 0}};
  add_quad(m, 0, 1, 2, 3);  // floor
  add_quad(m, 0, 1, 5, 4);  // z = -hz wall
  add_quad(m, 3, 2, 6, 7);  // z = +hz wall
  add_quad(m, 0, 3, 7, 4);  // x = -hx wall
  m.faces.push_back({4, 7, 8});
  add_quad(m, 1, 2, 6, 5);  // x = +hx wall
  m.faces.push_back({5, 6, 9});
  add_quad(m, 4, 5, 9, 8);  // roof slopes
  add_quad(m, 7, 6, 9, 8);
  orient_outward_convex(m);
  return m;
}

TriangleMesh make_hip_roof(const BuildingDims& dims, double ridge_height) {
  const double hx = dims.length / 2;
  const double hz = dims.width / 2;
  const double rx = std::max(0.0, hx - hz);
  const double e = dims.eave_height;
  TriangleMesh m;
  m.vertices = {{-hx, 0, -hz}, {hx, 0, -hz}, {hx, 0, hz}, {-hx, 0, hz},
                {-hx, e, -hz}, {hx, e, -hz}, {hx, e, hz}, {-hx, e, hz},
                {-rx, ridge_height, 0}, {rx, ridge_height, 0}};
  add_quad(m, 0, 1, 2, 3);
  add_quad(m, 0, 1, 5, 4);
  add_quad(m, 3, 2, 6, 7);
  add_quad(m, 0, 3, 7, 4);
  add_quad(m, 1, 2, 6, 5);
  add_quad(m, 4, 5, 9, 8);  // long slopes
  add_quad(m, 7, 6, 9, 8);
  m.faces.push_back({4, 7, 8});  // hip ends
  m.faces.push_back({5, 6, 9});
  orient_outward_convex(m);
  return m;
}

}  // namespace windmil::geometry
