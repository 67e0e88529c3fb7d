#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace windmil::geometry {

using Vec3 = Eigen::Vector3d;
using Face = std::array<std::uint32_t, 3>;

struct Aabb {
  Vec3 min;
  Vec3 max;

  Vec3 extent() const { return max - min; }
};

/// Indexed triangle surface. Coordinates are meters at full scale; y is up.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::vector<Vec3> normals;  // empty, or one unit vector per vertex

  bool operator==(const TriangleMesh&) const = default;
};

/// Throws GeometryError on out-of-range indices, repeated face vertices,
/// non-finite coordinates or a normal array of the wrong length.
void validate(const TriangleMesh& mesh);

/// True when every undirected edge is shared by exactly two faces.
bool is_watertight(const TriangleMesh& mesh);

Aabb bounding_box(const TriangleMesh& mesh);

/// Volume enclosed by a closed mesh; positive for outward-facing winding.
double signed_volume(const TriangleMesh& mesh);

/// Undirected edge count (each shared edge counted once).
std::size_t edge_count(const TriangleMesh& mesh);

/// V - E + F.
long euler_characteristic(const TriangleMesh& mesh);

TriangleMesh translated(const TriangleMesh& mesh, const Vec3& offset);

/// Reflects across the z = 0 plane. Face winding is flipped so the mirrored
/// surface stays outward-oriented.
TriangleMesh mirrored_z(const TriangleMesh& mesh);

// ASCII OBJ. Only `v` and `f` records are read; polygon faces are fan
// triangulated and `f a/b/c` forms are accepted. Normals are ignored.
TriangleMesh read_obj(const std::filesystem::path& path);
TriangleMesh parse_obj(const std::string& text);
void write_obj(const TriangleMesh& mesh, const std::filesystem::path& path);

// Primitives.
TriangleMesh make_box(const Vec3& lo, const Vec3& hi);
TriangleMesh make_icosphere(double radius, int subdivisions, const Vec3& center = Vec3::Zero());

/// Low-rise building basis shapes: footprint `length` along x by `width`
/// along z, centered on the origin, ground at y = 0.
struct BuildingDims {
  double length = 18.0;
  double width = 12.0;
  double eave_height = 8.0;
};

TriangleMesh make_flat_roof(const BuildingDims& dims, double height);
/// Ridge along x at `ridge_height`.
TriangleMesh make_gable_roof(const BuildingDims& dims, double ridge_height);
/// Equal-pitch hip roof: ridge along x of length (length - width).
TriangleMesh make_hip_roof(const BuildingDims& dims, double ridge_height);

}  // namespace windmil::geometry
