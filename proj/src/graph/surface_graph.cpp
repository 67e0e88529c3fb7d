#include "windmil/graph/surface_graph.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <queue>
#include <utility>

#include "windmil/binary_io.hpp"
#include "windmil/error.hpp"

namespace windmil::graph {

namespace {

std::atomic<std::uint64_t> g_reflect_calls{0};

// Static kd-tree over a point span; leaves hold up to kLeafSize points.
class KdTree {
 public:
  explicit KdTree(std::span<const Vec3> points) : points_(points), order_(points.size()) {
    std::iota(order_.begin(), order_.end(), 0u);
    if (!points.empty()) build(0, order_.size());
  }

  // (squared distance, index) of the k nearest points to points_[query],
  // excluding query itself, ascending.
  std::vector<std::pair<double, std::uint32_t>> nearest(std::uint32_t query, int k) const {
    Heap heap;
    search(0, query, static_cast<std::size_t>(k), heap);
    std::vector<std::pair<double, std::uint32_t>> out;
    out.reserve(heap.size());
    while (!heap.empty()) {
      out.push_back(heap.top());
      heap.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
  }

 private:
  static constexpr std::size_t kLeafSize = 12;

  struct Node {
    std::size_t begin, end;
    int axis = -1;  // -1 for leaves
    double split = 0.0;
    std::size_t left = 0, right = 0;
  };

  using Entry = std::pair<double, std::uint32_t>;
  using Heap = std::priority_queue<Entry>;  // max-heap on (d2, index)

  std::size_t build(std::size_t begin, std::size_t end) {
    const std::size_t id = nodes_.size();
    nodes_.push_back({begin, end});
    if (end - begin <= kLeafSize) return id;
    Vec3 lo = points_[order_[begin]], hi = lo;
    for (std::size_t i = begin; i < end; ++i) {
      lo = lo.cwiseMin(points_[order_[i]]);
      hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                       const double pa = points_[a][axis], pb = points_[b][axis];
                       return pa < pb || (pa == pb && a < b);
                     });
    const double split = points_[order_[mid]][axis];
    const std::size_t left = build(begin, mid);
    const std::size_t right = build(mid, end);
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  void offer(Heap& heap, std::size_t k, Entry e) const {
    if (heap.size() < k) {
      heap.push(e);
    } else if (e < heap.top()) {
      heap.pop();
      heap.push(e);
    }
  }

  void search(std::size_t id, std::uint32_t query, std::size_t k, Heap& heap) const {
    const Node& n = nodes_[id];
    const Vec3& q = points_[query];
    if (n.axis < 0) {
      for (std::size_t i = n.begin; i < n.end; ++i) {
        const std::uint32_t p = order_[i];
        if (p == query) continue;
        offer(heap, k, {(points_[p] - q).squaredNorm(), p});
      }
      return;
    }
    const double diff = q[n.axis] - n.split;
    const std::size_t near = diff < 0 ? n.left : n.right;
    const std::size_t far = diff < 0 ? n.right : n.left;
    search(near, query, k, heap);
    // Equal distances must still be visited so index tie-breaking is exact.
    if (heap.size() < k || diff * diff <= heap.top().first) search(far, query, k, heap);
  }

  std::span<const Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace

std::vector<std::vector<std::uint32_t>> k_nearest(std::span<const Vec3> points, int k) {
  if (k < 1) throw DomainError("k must be >= 1");
  if (static_cast<std::size_t>(k) >= points.size()) {
    throw DomainError("k (" + std::to_string(k) + ") must be < node count (" +
                      std::to_string(points.size()) + ")");
  }
  const KdTree tree(points);
  std::vector<std::vector<std::uint32_t>> out(points.size());
  for (std::uint32_t v = 0; v < points.size(); ++v) {
    for (const auto& [d2, idx] : tree.nearest(v, k)) out[v].push_back(idx);
  }
  return out;
}

SurfaceGraph build_graph(std::span<const Vec3> positions, std::span<const Vec3> normals,
                         double h_ref, int k, std::string case_id) {
  if (positions.size() != normals.size()) throw ShapeError("positions and normals differ in length");
  if (!(h_ref > 0.0)) throw DomainError("h_ref must be positive");
  const auto knn = k_nearest(positions, k);

  std::vector<std::vector<std::uint32_t>> adj(positions.size());
  for (std::uint32_t v = 0; v < knn.size(); ++v) {
    for (std::uint32_t u : knn[v]) {
      adj[v].push_back(u);
      adj[u].push_back(v);
    }
  }
  SurfaceGraph g;
  g.case_id = std::move(case_id);
  g.k = k;
  g.offsets.reserve(positions.size() + 1);
  g.offsets.push_back(0);
  for (auto& list : adj) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
    g.neighbors.insert(g.neighbors.end(), list.begin(), list.end());
    g.offsets.push_back(static_cast<std::uint32_t>(g.neighbors.size()));
  }
  g.features.resize(static_cast<Eigen::Index>(positions.size()), kFeatureCount);
  for (std::size_t v = 0; v < positions.size(); ++v) {
    const auto r = static_cast<Eigen::Index>(v);
    g.features(r, 0) = positions[v].x() / h_ref;
    g.features(r, 1) = positions[v].y() / h_ref;
    g.features(r, 2) = positions[v].z() / h_ref;
    g.features(r, 3) = normals[v].x();
    g.features(r, 4) = normals[v].y();
    g.features(r, 5) = normals[v].z();
  }
  return g;
}

SurfaceGraph build_graph(const geometry::CaseGeometry& c, int k) {
  if (c.mesh.normals.size() != c.mesh.vertices.size()) {
    throw GeometryError("case mesh has no per-vertex normals");
  }
  return build_graph(c.mesh.vertices, c.mesh.normals, c.h_ref, k, c.case_id);
}

FeatureTable reflect_features(const FeatureTable& x) {
  g_reflect_calls.fetch_add(1, std::memory_order_relaxed);
  if (x.cols() != kFeatureCount) {
    throw ShapeError("feature table has " + std::to_string(x.cols()) + " columns, expected 6");
  }
  FeatureTable out = x;
  out.col(kColZ) = -x.col(kColZ);
  out.col(kColNz) = -x.col(kColNz);
  return out;
}

std::uint64_t reflect_call_count() { return g_reflect_calls.load(std::memory_order_relaxed); }

void validate(const SurfaceGraph& g) {
  const std::size_t n = g.node_count();
  if (g.features.cols() != kFeatureCount) throw DataError("graph features must have 6 columns");
  if (g.offsets.size() != n + 1 || g.offsets.front() != 0 || g.offsets.back() != g.neighbors.size()) {
    throw DataError("graph CSR offsets are inconsistent");
  }
  if (!g.features.allFinite()) throw DataError("graph features are not finite");
  for (std::size_t v = 0; v < n; ++v) {
    if (g.offsets[v] > g.offsets[v + 1]) throw DataError("graph offsets decrease");
    const double len = g.features.row(static_cast<Eigen::Index>(v)).tail<3>().norm();
    if (std::abs(len - 1.0) > 1e-6) {
      throw DataError("normal of node " + std::to_string(v) + " is not unit length");
    }
    const auto nb = g.neighbors_of(v);
    for (std::size_t i = 0; i < nb.size(); ++i) {
      const std::uint32_t u = nb[i];
      if (u >= n) throw DataError("neighbour index out of range");
      if (u == v) throw DataError("self-loop at node " + std::to_string(v));
      if (i > 0 && nb[i - 1] >= u) throw DataError("neighbour list not strictly sorted");
      const auto back = g.neighbors_of(u);
      if (!std::binary_search(back.begin(), back.end(), static_cast<std::uint32_t>(v))) {
        throw DataError("adjacency is not symmetric");
      }
    }
  }
}

std::vector<std::uint8_t> serialize_graph(const SurfaceGraph& g) {
  ByteWriter w;
  w.put_bytes("WMLG");
  w.put<std::uint32_t>(kGraphFormatVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(g.node_count()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(g.k));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(g.case_id.size()));
  w.put_bytes(g.case_id);
  for (Eigen::Index r = 0; r < g.features.rows(); ++r)
    for (Eigen::Index c = 0; c < kFeatureCount; ++c) w.put<double>(g.features(r, c));
  for (std::uint32_t o : g.offsets) w.put<std::uint32_t>(o);
  for (std::uint32_t u : g.neighbors) w.put<std::uint32_t>(u);
  return w.take();
}

SurfaceGraph deserialize_graph(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.get_bytes(4) != "WMLG") throw FormatError("bad graph magic");
  const auto version = r.get<std::uint32_t>();
  if (version != kGraphFormatVersion) {
    throw FormatError("unsupported graph version " + std::to_string(version));
  }
  const auto n = r.get<std::uint32_t>();
  SurfaceGraph g;
  g.k = static_cast<int>(r.get<std::uint32_t>());
  g.case_id = r.get_bytes(r.get<std::uint32_t>());
  if (r.remaining() < static_cast<std::size_t>(n) * (kFeatureCount * 8 + 4) + 4) {
    throw FormatError("graph file truncated");
  }
  g.features.resize(n, kFeatureCount);
  for (std::uint32_t row = 0; row < n; ++row)
    for (int c = 0; c < kFeatureCount; ++c) g.features(row, c) = r.get<double>();
  g.offsets.resize(static_cast<std::size_t>(n) + 1);
  for (auto& o : g.offsets) o = r.get<std::uint32_t>();
  if (g.offsets.front() != 0) throw FormatError("graph offsets must start at 0");
  const std::size_t m = g.offsets.back();
  if (r.remaining() != m * 4) throw FormatError("graph neighbour array has the wrong length");
  g.neighbors.resize(m);
  for (auto& u : g.neighbors) u = r.get<std::uint32_t>();
  return g;
}

void write_graph(const SurfaceGraph& g, const std::filesystem::path& path) {
  write_file_bytes(path, serialize_graph(g));
}

SurfaceGraph read_graph(const std::filesystem::path& path) {
  return deserialize_graph(read_file_bytes(path));
}

}  // namespace windmil::graph
