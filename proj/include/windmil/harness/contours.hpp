#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "windmil/geometry/mesh.hpp"

namespace windmil::harness {

/// Legacy ASCII VTK PolyData with POINT_DATA scalars cp_pred, cp_true and
/// cp_abs_err = |cp_pred - cp_true|.
void export_contours(const geometry::TriangleMesh& mesh, std::span<const double> pred,
                     std::span<const double> target, const std::filesystem::path& path);

struct VtkPolyData {
  std::vector<geometry::Vec3> points;
  std::vector<std::vector<std::uint32_t>> polygons;
  std::map<std::string, std::vector<double>> point_scalars;
};

/// Reads the subset of the legacy format written by export_contours.
VtkPolyData read_vtk_polydata(const std::filesystem::path& path);

}  // namespace windmil::harness
