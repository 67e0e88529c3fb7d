#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "windmil/geometry/mesh.hpp"
#include "windmil/geometry/shape_space.hpp"

namespace windmil::graph {

using geometry::Vec3;

/// Node features, one row per node: (x, y, z) / h_ref followed by the unit
/// outward normal (n_x, n_y, n_z).
using FeatureTable = Eigen::MatrixXd;

inline constexpr int kFeatureCount = 6;
inline constexpr int kColZ = 2;
inline constexpr int kColNz = 5;

/// Surface point cloud graph. Adjacency is stored as CSR with each neighbour
/// list sorted ascending; the relation is symmetric and has no self-loops.
struct SurfaceGraph {
  std::string case_id;
  int k = 0;
  FeatureTable features;
  std::vector<std::uint32_t> offsets;    // node_count + 1 entries
  std::vector<std::uint32_t> neighbors;  // offsets.back() entries

  std::size_t node_count() const { return static_cast<std::size_t>(features.rows()); }
  std::span<const std::uint32_t> neighbors_of(std::size_t v) const {
    return {neighbors.data() + offsets[v], neighbors.data() + offsets[v + 1]};
  }
  std::size_t degree(std::size_t v) const { return offsets[v + 1] - offsets[v]; }

  bool operator==(const SurfaceGraph& o) const {
    return case_id == o.case_id && k == o.k && features == o.features && offsets == o.offsets &&
           neighbors == o.neighbors;
  }
};

/// k nearest neighbours of every point (excluding itself), ordered by
/// (squared distance, index). Ties therefore resolve toward lower indices.
std::vector<std::vector<std::uint32_t>> k_nearest(std::span<const Vec3> points, int k);

/// Symmetrized kNN graph over raw positions (meters) with features scaled
/// by `h_ref`. Throws DomainError when k < 1 or k >= point count.
SurfaceGraph build_graph(std::span<const Vec3> positions, std::span<const Vec3> normals,
                         double h_ref, int k, std::string case_id = {});

SurfaceGraph build_graph(const geometry::CaseGeometry& c, int k);

/// Reflection across the xy-plane on features: negates columns z and n_z.
/// Throws ShapeError unless the table has six columns.
FeatureTable reflect_features(const FeatureTable& x);

/// Number of reflect_features calls made by this process so far.
std::uint64_t reflect_call_count();

/// Structural checks: symmetric, sorted, no self-loops, finite features,
/// unit normals within 1e-6. Throws DataError on violation.
void validate(const SurfaceGraph& g);

// graph.bin: "WMLG", u32 version, u32 node_count, u32 k, u32 length + case_id
// bytes, node_count x 6 f64
// features (row-major), (node_count + 1) u32 offsets, u32 neighbour indices.
// All little-endian.
inline constexpr std::uint32_t kGraphFormatVersion = 1;

std::vector<std::uint8_t> serialize_graph(const SurfaceGraph& g);
SurfaceGraph deserialize_graph(std::span<const std::uint8_t> bytes);
void write_graph(const SurfaceGraph& g, const std::filesystem::path& path);
SurfaceGraph read_graph(const std::filesystem::path& path);

}  // namespace windmil::graph
