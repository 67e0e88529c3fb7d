#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "windmil/geometry/shape_space.hpp"
#include "windmil/graph/surface_graph.hpp"
#include "windmil/model/model.hpp"
#include "windmil/oracle/labels.hpp"

namespace windmil::harness {

// Dataset layout:
//   <root>/index.json                    generator settings + ordered case ids
//   <root>/<case_id>/mesh.obj            reconstructed surface (node order = vertex order)
//   <root>/<case_id>/meta.json           lattice, weights, angle, h_ref, grid
//   <root>/<case_id>/graph.bin           SurfaceGraph
//   <root>/<case_id>/labels.csv          per-node cp_mean, cp_std

struct GenerateConfig {
  int subdiv = 10;
  std::vector<double> angles{0, 15, 30, 45, 60, 75, 90};
  int grid_resolution = 64;
  int k = 8;
  geometry::SmoothingParams smoothing;
  bool oracle_labels = true;
  /// Empty means the built-in flat / gable / hip set.
  std::array<std::filesystem::path, 3> basis_paths;
};

struct GenerateSummary {
  std::size_t geometries_per_angle = 0;
  std::size_t case_count = 0;
  std::size_t boundary_cases = 0;
  std::size_t total_nodes = 0;
  double seconds = 0.0;
};

using ProgressFn = std::function<void(std::size_t done, std::size_t total, const std::string& case_id)>;

/// Sweeps angles x lattice points, writing one directory per case plus
/// index.json. Overwrites existing case directories of the same id.
GenerateSummary generate_dataset(const GenerateConfig& cfg, const std::filesystem::path& root,
                                 const ProgressFn& progress = {});

struct CaseMeta {
  std::string case_id;
  std::array<int, 3> lattice{};
  int subdiv = 0;
  bool is_boundary = false;
  double angle_deg = 0.0;
  double h_ref = 0.0;
  std::size_t node_count = 0;
};

CaseMeta read_case_meta(const std::filesystem::path& case_dir);

/// Case metadata in index order. Throws DataError when index.json is missing
/// or a listed case has no meta.json.
std::vector<CaseMeta> list_cases(const std::filesystem::path& root);

struct LoadedCase {
  CaseMeta meta;
  graph::SurfaceGraph graph;
  oracle::CpLabels labels;

  Eigen::VectorXd target(model::Target t) const;
};

/// Loads graph and labels and checks they agree with each other and meta.
LoadedCase load_case(const std::filesystem::path& root, const std::string& case_id);

/// Writes oracle labels for every case in the dataset (replacing labels.csv).
void label_dataset(const std::filesystem::path& root);

}  // namespace windmil::harness
