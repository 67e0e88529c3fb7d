#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <numeric>
#include <random>
#include <set>

#include "windmil/error.hpp"
#include "windmil/geometry/surface.hpp"
#include "windmil/graph/surface_graph.hpp"

namespace wg = windmil::geometry;
namespace gr = windmil::graph;
using wg::Vec3;

namespace {

using EdgeSet = std::set<std::pair<std::uint32_t, std::uint32_t>>;

EdgeSet edges(const gr::SurfaceGraph& g) {
  EdgeSet out;
  for (std::size_t v = 0; v < g.node_count(); ++v)
    for (auto u : g.neighbors_of(v)) out.emplace(static_cast<std::uint32_t>(v), u);
  return out;
}

std::vector<Vec3> random_cloud(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec3> pts(n);
  for (auto& p : pts) p = {u(rng), u(rng), u(rng)};
  return pts;
}

std::vector<Vec3> unit_normals(std::size_t n) { return std::vector<Vec3>(n, Vec3(0, 1, 0)); }

// O(n^2) reference: sort every other point by (d2, index), keep k.
std::vector<std::vector<std::uint32_t>> brute_knn(const std::vector<Vec3>& pts, int k) {
  std::vector<std::vector<std::uint32_t>> out(pts.size());
  for (std::uint32_t v = 0; v < pts.size(); ++v) {
    std::vector<std::pair<double, std::uint32_t>> all;
    for (std::uint32_t u = 0; u < pts.size(); ++u)
      if (u != v) all.emplace_back((pts[u] - pts[v]).squaredNorm(), u);
    std::sort(all.begin(), all.end());
    for (int i = 0; i < k; ++i) out[v].push_back(all[i].second);
  }
  return out;
}

}  // namespace

TEST(Knn, CollinearTripleWithKOne) {
  // Ends pick the middle; the middle's tie between 0 and 2 goes to 0.
  const std::vector<Vec3> pts = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  const auto g = gr::build_graph(pts, unit_normals(3), 1.0, 1);
  EXPECT_EQ(g.degree(0), 1u);
  EXPECT_EQ(g.degree(1), 2u);
  EXPECT_EQ(g.degree(2), 1u);
  EXPECT_NO_THROW(gr::validate(g));
}

TEST(Knn, MatchesBruteForceIncludingTies) {
  auto pts = random_cloud(400, 3);
  // Lattice points produce many exact distance ties.
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      for (int l = 0; l < 4; ++l) pts.emplace_back(i * 0.25, j * 0.25, l * 0.25);
  for (int k : {1, 4, 8, 12}) {
    EXPECT_EQ(gr::k_nearest(pts, k), brute_knn(pts, k)) << "k=" << k;
  }
}

TEST(Knn, RejectsBadK) {
  const auto pts = random_cloud(5, 1);
  EXPECT_THROW(gr::k_nearest(pts, 0), windmil::DomainError);
  EXPECT_THROW(gr::k_nearest(pts, 5), windmil::DomainError);
  EXPECT_NO_THROW(gr::k_nearest(pts, 4));
}

TEST(Graph, SymmetricWithDegreeBounds) {
  // Every node keeps its own k picks, so degree >= k. The 2k ceiling is not a
  // theorem for arbitrary clouds; it is checked on a near-uniform surface mesh.
  auto mesh = wg::make_icosphere(1.0, 3);
  mesh.normals = wg::compute_vertex_normals(mesh);
  const int k = 8;
  const auto g = gr::build_graph(mesh.vertices, mesh.normals, 1.0, k);
  gr::validate(g);
  const auto es = edges(g);
  for (const auto& [a, b] : es) EXPECT_TRUE(es.count({b, a}));
  for (std::size_t v = 0; v < g.node_count(); ++v) {
    EXPECT_GE(g.degree(v), static_cast<std::size_t>(k));
    EXPECT_LE(g.degree(v), static_cast<std::size_t>(2 * k));
  }
  const auto pts = random_cloud(300, 7);
  const auto r = gr::build_graph(pts, unit_normals(pts.size()), 1.0, k);
  for (std::size_t v = 0; v < r.node_count(); ++v) EXPECT_GE(r.degree(v), static_cast<std::size_t>(k));
}

TEST(Graph, FeaturesAreScaledPositionsAndNormals) {
  const std::vector<Vec3> pts = {{0, 0, 0}, {4, 8, -2}, {2, 4, 6}};
  const std::vector<Vec3> nrm = {{1, 0, 0}, {0, 1, 0}, {0, 0, -1}};
  const auto g = gr::build_graph(pts, nrm, 8.0, 1, "c");
  EXPECT_DOUBLE_EQ(g.features(1, 1), 1.0);  // apex of an 8 m building maps to 1
  EXPECT_DOUBLE_EQ(g.features(1, 0), 0.5);
  EXPECT_DOUBLE_EQ(g.features(1, 2), -0.25);
  EXPECT_DOUBLE_EQ(g.features(2, 5), -1.0);
  EXPECT_THROW(gr::build_graph(pts, nrm, 0.0, 1), windmil::DomainError);
}

TEST(Graph, MirroredPointsGiveIdenticalEdges) {
  auto pts = random_cloud(250, 11);
  std::vector<Vec3> mirrored = pts;
  for (auto& p : mirrored) p.z() = -p.z();
  const auto a = gr::build_graph(pts, unit_normals(pts.size()), 1.0, 8);
  const auto b = gr::build_graph(mirrored, unit_normals(pts.size()), 1.0, 8);
  EXPECT_EQ(a.offsets, b.offsets);
  EXPECT_EQ(a.neighbors, b.neighbors);
}

TEST(Graph, MirroredSphereMeshGivesIdenticalEdges) {
  auto mesh = wg::make_icosphere(1.0, 2);
  mesh.normals = wg::compute_vertex_normals(mesh);
  auto mirror = mesh;
  for (auto& p : mirror.vertices) p.z() = -p.z();
  for (auto& n : mirror.normals) n.z() = -n.z();
  const auto a = gr::build_graph(mesh.vertices, mesh.normals, 1.0, 8);
  const auto b = gr::build_graph(mirror.vertices, mirror.normals, 1.0, 8);
  EXPECT_EQ(edges(a), edges(b));
  EXPECT_TRUE(gr::reflect_features(a.features).isApprox(b.features, 1e-12));
}

TEST(Graph, RelabellingNodesPermutesEdges) {
  const auto pts = random_cloud(200, 5);
  std::vector<std::uint32_t> perm(pts.size());
  std::iota(perm.begin(), perm.end(), 0u);
  std::shuffle(perm.begin(), perm.end(), std::mt19937(9));
  std::vector<Vec3> shuffled(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) shuffled[perm[i]] = pts[i];
  const auto a = gr::build_graph(pts, unit_normals(pts.size()), 1.0, 6);
  const auto b = gr::build_graph(shuffled, unit_normals(pts.size()), 1.0, 6);
  EdgeSet mapped;
  for (const auto& [u, v] : edges(a)) mapped.emplace(perm[u], perm[v]);
  EXPECT_EQ(mapped, edges(b));
}

TEST(Reflect, NegatesZAndNormalZ) {
  gr::FeatureTable x(2, 6);
  x << 1, 2, 3, 0.6, 0, 0.8,  //
      -1, 0.5, -2, 0, 1, 0;
  gr::FeatureTable expected(2, 6);
  expected << 1, 2, -3, 0.6, 0, -0.8,  //
      -1, 0.5, 2, 0, 1, 0;
  EXPECT_EQ(gr::reflect_features(x), expected);
  EXPECT_EQ(gr::reflect_features(gr::reflect_features(x)), x);
}

TEST(Reflect, CountsCallsAndRejectsWrongWidth) {
  const auto before = gr::reflect_call_count();
  gr::reflect_features(gr::FeatureTable::Zero(3, 6));
  EXPECT_EQ(gr::reflect_call_count(), before + 1);
  EXPECT_THROW(gr::reflect_features(gr::FeatureTable::Zero(3, 5)), windmil::ShapeError);
}

TEST(GraphIo, RoundTripAndTruncation) {
  const auto pts = random_cloud(60, 2);
  std::vector<Vec3> nrm(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) nrm[i] = pts[i].normalized();
  const auto g = gr::build_graph(pts, nrm, 3.0, 5, "i10-j00-k00-a000");
  const auto dir = std::filesystem::temp_directory_path() / "windmil_graph_io";
  std::filesystem::create_directories(dir);
  gr::write_graph(g, dir / "graph.bin");
  EXPECT_EQ(gr::read_graph(dir / "graph.bin"), g);

  auto bytes = gr::serialize_graph(g);
  bytes.resize(bytes.size() - 3);
  EXPECT_THROW(gr::deserialize_graph(bytes), windmil::FormatError);
  auto bad = gr::serialize_graph(g);
  bad[0] = 'X';
  EXPECT_THROW(gr::deserialize_graph(bad), windmil::FormatError);
  EXPECT_THROW(gr::read_graph(dir / "missing.bin"), windmil::IoError);
}

TEST(GraphValidate, DetectsAsymmetry) {
  const auto pts = random_cloud(20, 4);
  auto g = gr::build_graph(pts, unit_normals(pts.size()), 1.0, 3);
  EXPECT_NO_THROW(gr::validate(g));
  // Drop one directed entry.
  g.neighbors.erase(g.neighbors.begin());
  for (std::size_t i = 1; i < g.offsets.size(); ++i) --g.offsets[i];
  EXPECT_THROW(gr::validate(g), windmil::DataError);
}
