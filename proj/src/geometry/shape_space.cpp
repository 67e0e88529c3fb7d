#include "windmil/geometry/shape_space.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "windmil/error.hpp"
#include "windmil/geometry/surface.hpp"

namespace windmil::geometry {

std::vector<LatticePoint> enumerate_barycentric_lattice(int subdiv) {
  if (subdiv < 1) throw DomainError("lattice subdivision must be >= 1");
  std::vector<LatticePoint> points;
  points.reserve(static_cast<std::size_t>(subdiv + 1) * (subdiv + 2) / 2);
  const double n = subdiv;
  for (int i = subdiv; i >= 0; --i) {
    for (int j = subdiv - i; j >= 0; --j) {
      const int k = subdiv - i - j;
      LatticePoint p;
      p.index = {i, j, k};
      p.weights.w = {i / n, j / n, k / n};
      p.is_boundary = i == 0 || j == 0 || k == 0;
      points.push_back(p);
    }
  }
  return points;
}

std::string make_case_id(const std::array<int, 3>& lattice, double angle_deg) {
  char buf[64];
  if (angle_deg == std::floor(angle_deg) && std::abs(angle_deg) < 1e6) {
    std::snprintf(buf, sizeof buf, "i%02d-j%02d-k%02d-a%03d", lattice[0], lattice[1], lattice[2],
                  static_cast<int>(angle_deg));
  } else {
    std::snprintf(buf, sizeof buf, "i%02d-j%02d-k%02d-a%g", lattice[0], lattice[1], lattice[2],
                  angle_deg);
  }
  return buf;
}

BasisSet prepare_basis(std::array<TriangleMesh, 3> meshes) {
  Aabb box = bounding_box(meshes[0]);
  for (const TriangleMesh& m : meshes) {
    validate(m);
    if (!is_watertight(m)) throw GeometryError("basis mesh is not watertight");
    const Aabb b = bounding_box(m);
    box.min = box.min.cwiseMin(b.min);
    box.max = box.max.cwiseMax(b.max);
  }
  const Vec3 shift(-0.5 * (box.min.x() + box.max.x()), -box.min.y(),
                   -0.5 * (box.min.z() + box.max.z()));
  BasisSet basis;
  for (int i = 0; i < 3; ++i) {
    basis.meshes[i] = translated(meshes[i], shift);
    basis.meshes[i].normals.clear();
  }
  return basis;
}

BasisSet default_basis() {
  const BuildingDims dims;
  return prepare_basis({make_flat_roof(dims, 8.0), make_gable_roof(dims, 16.0),
                        make_hip_roof(dims, 24.0)});
}

GridSpec grid_for_basis(const BasisSet& basis, int resolution) {
  double radius = 0.0;
  double top = 0.0;
  double bottom = 0.0;
  for (const TriangleMesh& m : basis.meshes) {
    for (const Vec3& v : m.vertices) {
      radius = std::max(radius, std::hypot(v.x(), v.z()));
      top = std::max(top, v.y());
      bottom = std::min(bottom, v.y());
    }
  }
  const Aabb box{Vec3(-radius, bottom, -radius), Vec3(radius, top, radius)};
  return fit_grid(box, resolution);
}

namespace {

CaseGeometry finish_case(const SDFField& sdf, const LatticePoint& point, int subdiv,
                         double angle_deg, const SmoothingParams& smoothing) {
  TriangleMesh mesh = marching_cubes(sdf, 0.0);
  mesh = laplacian_smooth(mesh, smoothing.iterations, smoothing.lambda);
  double ground = mesh.vertices.front().y();
  for (const Vec3& v : mesh.vertices) ground = std::min(ground, v.y());
  for (Vec3& v : mesh.vertices) v.y() -= ground;
  mesh.normals = compute_vertex_normals(mesh);

  CaseGeometry c;
  c.h_ref = 0.0;
  for (const Vec3& v : mesh.vertices) c.h_ref = std::max(c.h_ref, v.y());
  if (!(c.h_ref > 0.0)) throw GeometryError("reconstructed mesh has no vertical extent");
  c.mesh = std::move(mesh);
  c.weights = point.weights;
  c.lattice = point.index;
  c.subdiv = subdiv;
  c.is_boundary = point.is_boundary;
  c.angle_deg = angle_deg;
  c.case_id = make_case_id(point.index, angle_deg);
  c.grid = sdf.spec;
  c.smoothing = smoothing;
  return c;
}

}  // namespace

DirectionFields::DirectionFields(const BasisSet& basis, double angle_deg, const GridSpec& spec)
    : angle_deg_(angle_deg) {
  for (int i = 0; i < 3; ++i) {
    const TriangleMesh rotated = rotate_about_vertical(basis.meshes[i], angle_deg);
    fields_[i] = occupancy_to_sdf(voxelize(rotated, spec));
  }
}

CaseGeometry DirectionFields::reconstruct(const LatticePoint& point, int subdiv,
                                          const SmoothingParams& smoothing) const {
  const SDFField sdf = interpolate_sdf(fields_, point.weights);
  return finish_case(sdf, point, subdiv, angle_deg_, smoothing);
}

CaseGeometry generate_case(const BasisSet& basis, const LatticePoint& point, int subdiv,
                           double angle_deg, const GridSpec& spec,
                           const SmoothingParams& smoothing) {
  return DirectionFields(basis, angle_deg, spec).reconstruct(point, subdiv, smoothing);
}

std::vector<double> parse_angles(const std::string& text) {
  std::vector<double> angles;
  try {
    if (text.find(':') != std::string::npos) {
      std::stringstream ss(text);
      std::string a, b, c;
      std::getline(ss, a, ':');
      std::getline(ss, b, ':');
      std::getline(ss, c, ':');
      const double start = std::stod(a);
      const double stop = std::stod(b);
      const double step = c.empty() ? 1.0 : std::stod(c);
      if (!(step > 0.0)) throw DomainError("angle step must be positive");
      const int count = static_cast<int>(std::floor((stop - start) / step + 1e-9)) + 1;
      for (int i = 0; i < count; ++i) angles.push_back(start + i * step);
    } else {
      std::stringstream ss(text);
      std::string tok;
      while (std::getline(ss, tok, ',')) angles.push_back(std::stod(tok));
    }
  } catch (const std::invalid_argument&) {
    throw DomainError("cannot parse angles '" + text + "'");
  }
  if (angles.empty()) throw DomainError("no angles in '" + text + "'");
  return angles;
}

nlohmann::json case_meta_json(const CaseGeometry& c) {
  nlohmann::json grid = {
      {"origin", {c.grid.origin.x(), c.grid.origin.y(), c.grid.origin.z()}},
      {"spacing", c.grid.spacing},
      {"dims", c.grid.dims},
  };
  return {
      {"case_id", c.case_id},
      {"weights", c.weights.w},
      {"lattice", c.lattice},
      {"subdiv", c.subdiv},
      {"is_boundary", c.is_boundary},
      {"angle_deg", c.angle_deg},
      {"h_ref", c.h_ref},
      {"node_count", c.mesh.vertices.size()},
      {"grid", grid},
      {"smoothing", {{"iterations", c.smoothing.iterations}, {"lambda", c.smoothing.lambda}}},
      {"generator_version", kGeneratorVersion},
  };
}

void write_case_geometry(const CaseGeometry& c, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_obj(c.mesh, dir / "mesh.obj");
  std::ofstream meta(dir / "meta.json");
  if (!meta) throw IoError("cannot write " + (dir / "meta.json").string());
  meta << case_meta_json(c).dump(2) << '\n';
}

}  // namespace windmil::geometry
