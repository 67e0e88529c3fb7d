#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "windmil/geometry/grid.hpp"
#include "windmil/geometry/mesh.hpp"
#include "windmil/geometry/sdf.hpp"

namespace windmil::geometry {

inline constexpr const char* kGeneratorVersion = "windmil-geometry/1";

struct LatticePoint {
  std::array<int, 3> index{};  // i + j + k == subdiv
  BarycentricWeights weights;
  bool is_boundary = false;
};

/// All (i, j, k) / subdiv with i + j + k = subdiv, i descending then j
/// descending. Throws DomainError for subdiv < 1.
std::vector<LatticePoint> enumerate_barycentric_lattice(int subdiv);

struct SmoothingParams {
  int iterations = 10;
  double lambda = 0.5;

  bool operator==(const SmoothingParams&) const = default;
};

/// One generated building: reconstructed surface plus provenance.
struct CaseGeometry {
  TriangleMesh mesh;  // with per-vertex normals
  BarycentricWeights weights;
  std::array<int, 3> lattice{};
  int subdiv = 0;
  bool is_boundary = false;
  double angle_deg = 0.0;
  double h_ref = 0.0;
  std::string case_id;
  GridSpec grid;
  SmoothingParams smoothing;

  bool operator==(const CaseGeometry&) const = default;
};

std::string make_case_id(const std::array<int, 3>& lattice, double angle_deg);

/// Three basis meshes moved so the shared footprint centroid sits at x = z = 0
/// and the lowest vertex at y = 0.
struct BasisSet {
  std::array<TriangleMesh, 3> meshes;
};

BasisSet prepare_basis(std::array<TriangleMesh, 3> meshes);

/// Flat (8 m), gable (16 m) and hip (24 m) roofs over an 18 m x 12 m footprint.
BasisSet default_basis();

/// Grid large enough to hold every basis mesh at any rotation about the
/// vertical axis through the origin.
GridSpec grid_for_basis(const BasisSet& basis, int resolution);

/// Full pipeline for one case: rotate the basis meshes, voxelize, distance
/// transform, interpolate, extract, smooth, ground, normals.
CaseGeometry generate_case(const BasisSet& basis, const LatticePoint& point, int subdiv,
                           double angle_deg, const GridSpec& spec,
                           const SmoothingParams& smoothing = {});

/// Caches the three basis SDFs for one wind direction, so the lattice sweep
/// voxelizes each rotated basis once.
class DirectionFields {
 public:
  DirectionFields(const BasisSet& basis, double angle_deg, const GridSpec& spec);

  double angle_deg() const { return angle_deg_; }
  const std::array<SDFField, 3>& fields() const { return fields_; }

  CaseGeometry reconstruct(const LatticePoint& point, int subdiv,
                           const SmoothingParams& smoothing = {}) const;

 private:
  double angle_deg_;
  std::array<SDFField, 3> fields_;
};

/// Parses "start:stop:step" (inclusive stop) or a comma-separated list.
std::vector<double> parse_angles(const std::string& text);

nlohmann::json case_meta_json(const CaseGeometry& c);

/// Writes mesh.obj and meta.json under `dir`.
void write_case_geometry(const CaseGeometry& c, const std::filesystem::path& dir);

}  // namespace windmil::geometry
