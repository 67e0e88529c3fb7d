#include "windmil/harness/dataset.hpp"

#include <chrono>
#include <fstream>

#include <json.hpp>

#include "windmil/error.hpp"

namespace windmil::harness {

namespace {

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

GenerateSummary generate_dataset(const GenerateConfig& cfg, const std::filesystem::path& root,
                                 const ProgressFn& progress) {
  const auto start = std::chrono::steady_clock::now();
  if (cfg.angles.empty()) throw ConfigError("no wind angles given");
  if (cfg.k < 1) throw DomainError("k must be >= 1");

  geometry::BasisSet basis;
  if (cfg.basis_paths[0].empty()) {
    basis = geometry::default_basis();
  } else {
    std::array<geometry::TriangleMesh, 3> meshes;
    for (int i = 0; i < 3; ++i) meshes[i] = geometry::read_obj(cfg.basis_paths[i]);
    basis = geometry::prepare_basis(std::move(meshes));
  }
  const geometry::GridSpec spec = geometry::grid_for_basis(basis, cfg.grid_resolution);
  const auto lattice = geometry::enumerate_barycentric_lattice(cfg.subdiv);

  std::filesystem::create_directories(root);
  GenerateSummary summary;
  summary.geometries_per_angle = lattice.size();
  const std::size_t total = lattice.size() * cfg.angles.size();
  nlohmann::json ids = nlohmann::json::array();
  for (double angle : cfg.angles) {
    const geometry::DirectionFields fields(basis, angle, spec);
    for (const auto& point : lattice) {
      const geometry::CaseGeometry c = fields.reconstruct(point, cfg.subdiv, cfg.smoothing);
      const auto dir = root / c.case_id;
      geometry::write_case_geometry(c, dir);
      const graph::SurfaceGraph g = graph::build_graph(c, cfg.k);
      graph::write_graph(g, dir / "graph.bin");
      if (cfg.oracle_labels) oracle::write_labels_csv(oracle::pseudo_cp(g, angle), dir / "labels.csv");
      ids.push_back(c.case_id);
      ++summary.case_count;
      summary.boundary_cases += c.is_boundary ? 1 : 0;
      summary.total_nodes += g.node_count();
      if (progress) progress(summary.case_count, total, c.case_id);
    }
  }
  nlohmann::json index = {
      {"generator_version", geometry::kGeneratorVersion},
      {"subdiv", cfg.subdiv},
      {"angles", cfg.angles},
      {"grid_resolution", cfg.grid_resolution},
      {"k", cfg.k},
      {"smoothing", {{"iterations", cfg.smoothing.iterations}, {"lambda", cfg.smoothing.lambda}}},
      {"oracle_labels", cfg.oracle_labels},
      {"cases", ids},
  };
  write_json(index, root / "index.json");
  summary.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return summary;
}

CaseMeta read_case_meta(const std::filesystem::path& case_dir) {
  const auto j = read_json(case_dir / "meta.json");
  CaseMeta m;
  try {
    m.case_id = j.at("case_id").get<std::string>();
    m.lattice = j.at("lattice").get<std::array<int, 3>>();
    m.subdiv = j.at("subdiv").get<int>();
    m.is_boundary = j.at("is_boundary").get<bool>();
    m.angle_deg = j.at("angle_deg").get<double>();
    m.h_ref = j.at("h_ref").get<double>();
    m.node_count = j.at("node_count").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError((case_dir / "meta.json").string() + ": " + e.what());
  }
  return m;
}

std::vector<CaseMeta> list_cases(const std::filesystem::path& root) {
  const auto index = read_json(root / "index.json");
  std::vector<CaseMeta> out;
  try {
    for (const auto& id : index.at("cases")) out.push_back(read_case_meta(root / id.get<std::string>()));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError((root / "index.json").string() + ": " + e.what());
  }
  return out;
}

Eigen::VectorXd LoadedCase::target(model::Target t) const {
  const auto& src = t == model::Target::kCpMean ? labels.cp_mean : labels.cp_std;
  return Eigen::Map<const Eigen::VectorXd>(src.data(), static_cast<Eigen::Index>(src.size()));
}

LoadedCase load_case(const std::filesystem::path& root, const std::string& case_id) {
  const auto dir = root / case_id;
  LoadedCase lc;
  lc.meta = read_case_meta(dir);
  lc.graph = graph::read_graph(dir / "graph.bin");
  if (!std::filesystem::exists(dir / "labels.csv")) {
    throw DataError("case " + case_id + " has no labels.csv (run `label` or `ingest` first)");
  }
  lc.labels = oracle::read_labels_csv(dir / "labels.csv");
  if (lc.graph.case_id != case_id || lc.meta.case_id != case_id) {
    throw DataError("case directory " + case_id + " holds data for another case");
  }
  if (lc.graph.node_count() != lc.meta.node_count || lc.labels.size() != lc.meta.node_count) {
    throw DataError("case " + case_id + ": node counts of meta, graph and labels differ");
  }
  return lc;
}

void label_dataset(const std::filesystem::path& root) {
  for (const auto& meta : list_cases(root)) {
    const auto dir = root / meta.case_id;
    const auto g = graph::read_graph(dir / "graph.bin");
    oracle::write_labels_csv(oracle::pseudo_cp(g, meta.angle_deg), dir / "labels.csv");
  }
}

}  // namespace windmil::harness
