#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "windmil/error.hpp"
#include "windmil/harness/contours.hpp"
#include "windmil/harness/experiment.hpp"

namespace hs = windmil::harness;
namespace md = windmil::model;
namespace gr = windmil::graph;
namespace fs = std::filesystem;

namespace {

// 15 lattice points (12 boundary, 3 interior) at two angles on a 32^3 grid.
class SmallDataset : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / "windmil_harness_dataset";
    fs::remove_all(root_);
    hs::GenerateConfig cfg;
    cfg.subdiv = 4;
    cfg.angles = {0.0, 45.0};
    cfg.grid_resolution = 32;
    summary_ = hs::generate_dataset(cfg, root_);
  }

  static fs::path root_;
  static hs::GenerateSummary summary_;
};

fs::path SmallDataset::root_;
hs::GenerateSummary SmallDataset::summary_;

std::vector<hs::CaseMeta> synthetic_metas(int subdiv, int angles) {
  std::vector<hs::CaseMeta> out;
  for (int a = 0; a < angles; ++a) {
    for (const auto& p : windmil::geometry::enumerate_barycentric_lattice(subdiv)) {
      hs::CaseMeta m;
      m.lattice = p.index;
      m.subdiv = subdiv;
      m.is_boundary = p.is_boundary;
      m.angle_deg = 15.0 * a;
      m.case_id = windmil::geometry::make_case_id(p.index, m.angle_deg);
      out.push_back(m);
    }
  }
  return out;
}

std::vector<std::string> numbered_ids(int n) {
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) ids.push_back("case" + std::to_string(i));
  return ids;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(SplitInterpolation, SizesForFullDataset) {
  const auto s = hs::split_interpolation(numbered_ids(462), {0.70, 0.15, 0.15}, 7);
  EXPECT_EQ(s.train.size(), 323u);
  EXPECT_EQ(s.dev.size(), 69u);
  EXPECT_EQ(s.test.size(), 70u);
  hs::validate(s, numbered_ids(462));
  EXPECT_EQ(s, hs::split_interpolation(numbered_ids(462), {0.70, 0.15, 0.15}, 7));
  EXPECT_NE(s.train, hs::split_interpolation(numbered_ids(462), {0.70, 0.15, 0.15}, 8).train);
}

TEST(SplitInterpolation, InputOrderDoesNotMatter) {
  auto ids = numbered_ids(50);
  const auto a = hs::split_interpolation(ids, {0.6, 0.2, 0.2}, 3);
  std::reverse(ids.begin(), ids.end());
  EXPECT_EQ(a, hs::split_interpolation(ids, {0.6, 0.2, 0.2}, 3));
}

TEST(SplitInterpolation, RejectsEmptyPartitions) {
  EXPECT_THROW(hs::split_interpolation(numbered_ids(462), {1.0, 0.0, 0.0}, 1), windmil::ConfigError);
  EXPECT_THROW(hs::split_interpolation(numbered_ids(462), {0.5, 0.2, 0.2}, 1), windmil::ConfigError);
  EXPECT_THROW(hs::split_interpolation(numbered_ids(2), {0.4, 0.3, 0.3}, 1), windmil::ConfigError);
}

TEST(SplitExtrapolation, HoldsOutBoundaryLattice) {
  const auto metas = synthetic_metas(10, 7);
  ASSERT_EQ(metas.size(), 462u);
  const auto s = hs::split_extrapolation(metas, 5);
  EXPECT_EQ(s.test.size(), 210u);
  EXPECT_EQ(s.train.size() + s.dev.size(), 252u);
  EXPECT_EQ(s.train.size(), 201u);  // floor(0.8 * 252)
  std::vector<std::string> all;
  for (const auto& m : metas) all.push_back(m.case_id);
  hs::validate(s, all);

  std::set<std::array<int, 3>> train_lattice;
  const std::set<std::string> train_ids(s.train.begin(), s.train.end());
  for (const auto& m : metas) {
    if (train_ids.count(m.case_id)) train_lattice.insert(m.lattice);
  }
  const std::set<std::string> test_ids(s.test.begin(), s.test.end());
  for (const auto& m : metas) {
    EXPECT_EQ(test_ids.count(m.case_id) == 1, m.is_boundary);
    if (test_ids.count(m.case_id)) EXPECT_EQ(train_lattice.count(m.lattice), 0u);
  }
  EXPECT_EQ(s, hs::split_extrapolation(metas, 5));
}

TEST(SplitExtrapolation, AllBoundaryIsConfigError) {
  EXPECT_THROW(hs::split_extrapolation(synthetic_metas(1, 7), 1), windmil::ConfigError);
  auto interior_only = synthetic_metas(10, 1);
  std::erase_if(interior_only, [](const hs::CaseMeta& m) { return m.is_boundary; });
  EXPECT_THROW(hs::split_extrapolation(interior_only, 1), windmil::ConfigError);
}

TEST(SplitJson, RoundTrip) {
  const auto s = hs::split_extrapolation(synthetic_metas(6, 3), 11);
  const auto path = fs::temp_directory_path() / "windmil_split_test.json";
  hs::write_split(s, path);
  EXPECT_EQ(hs::read_split(path), s);
  auto broken = hs::to_json(s);
  broken["dev"].push_back(s.train.front());
  EXPECT_THROW(hs::split_from_json(broken), windmil::ConfigError);
}

TEST(Metrics, HandExample) {
  const std::vector<double> target = {0.0, 1.0}, pred = {0.05, 0.95};
  const auto m = hs::compute_metrics(pred, target, 0.10);
  EXPECT_NEAR(m.mae, 0.05, 1e-15);
  EXPECT_NEAR(m.rmse, 0.05, 1e-15);
  EXPECT_DOUBLE_EQ(m.hitrate_pct, 100.0);
}

TEST(Metrics, PerfectAndMeanPredictors) {
  const std::vector<double> t = {0.1, -0.4, 0.7, 0.2};
  auto m = hs::compute_metrics(t, t, 0.1);
  EXPECT_EQ(m.rmse, 0.0);
  EXPECT_EQ(m.r2, 1.0);
  EXPECT_EQ(m.hitrate_pct, 100.0);
  const double mean = (0.1 - 0.4 + 0.7 + 0.2) / 4.0;
  const std::vector<double> flat(4, mean);
  m = hs::compute_metrics(flat, t, 0.1);
  EXPECT_NEAR(m.r2, 0.0, 1e-15);
}

TEST(Metrics, ZeroVarianceTargetsFlagR2) {
  const std::vector<double> t(5, 0.3), p = {0.3, 0.2, 0.4, 0.3, 0.3};
  const auto m = hs::compute_metrics(p, t, 0.05);
  EXPECT_FALSE(m.r2_defined);
  EXPECT_TRUE(std::isnan(m.r2));
  EXPECT_NEAR(m.hitrate_pct, 60.0, 1e-12);
  EXPECT_TRUE(hs::to_json(m)["r2"].is_null());
}

TEST(Metrics, ClosedToleranceInterval) {
  const std::vector<double> t = {0.25}, p = {0.5};
  EXPECT_EQ(hs::compute_metrics(p, t, 0.25).hitrate_pct, 100.0);
  EXPECT_EQ(hs::compute_metrics(p, t, 0.2499).hitrate_pct, 0.0);
}

TEST(Metrics, SelfConsistencyOnRandomVectors) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd(0.0, 0.3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> p(200), t(200);
    for (std::size_t i = 0; i < p.size(); ++i) {
      t[i] = nd(rng);
      p[i] = t[i] + nd(rng);
    }
    const auto m = hs::compute_metrics(p, t, 0.1);
    EXPECT_NEAR(m.rmse * m.rmse, m.mse, 1e-12);
    EXPECT_LE(m.r2, 1.0);
    double prev = -1.0;
    for (double tol : {0.0, 0.05, 0.1, 0.2, 0.5, 5.0}) {
      const double h = hs::compute_metrics(p, t, tol).hitrate_pct;
      EXPECT_GE(h, prev);
      EXPECT_GE(h, 0.0);
      EXPECT_LE(h, 100.0);
      prev = h;
    }
  }
}

TEST(Metrics, Errors) {
  const std::vector<double> a = {1.0}, b = {1.0, 2.0}, none;
  EXPECT_THROW(hs::compute_metrics(a, b, 0.1), windmil::ShapeError);
  EXPECT_THROW(hs::compute_metrics(none, none, 0.1), windmil::ShapeError);
}

TEST_F(SmallDataset, CardinalityAndLayout) {
  EXPECT_EQ(summary_.geometries_per_angle, 15u);
  EXPECT_EQ(summary_.case_count, 30u);
  EXPECT_EQ(summary_.boundary_cases, 24u);
  const auto metas = hs::list_cases(root_);
  ASSERT_EQ(metas.size(), 30u);
  for (const auto& m : metas) {
    for (const char* f : {"mesh.obj", "meta.json", "graph.bin", "labels.csv"}) {
      EXPECT_TRUE(fs::exists(root_ / m.case_id / f)) << m.case_id << "/" << f;
    }
  }
  const auto lc = hs::load_case(root_, metas[7].case_id);
  EXPECT_EQ(lc.graph.node_count(), lc.meta.node_count);
  EXPECT_EQ(lc.labels.size(), lc.meta.node_count);
  EXPECT_NO_THROW(gr::validate(lc.graph));
  const auto mesh = windmil::geometry::read_obj(root_ / metas[7].case_id / "mesh.obj");
  EXPECT_EQ(mesh.vertices.size(), lc.meta.node_count);
}

TEST_F(SmallDataset, MissingLabelsIsDataError) {
  const auto metas = hs::list_cases(root_);
  const auto dir = fs::temp_directory_path() / "windmil_nolabels";
  fs::remove_all(dir);
  fs::create_directories(dir);
  fs::copy(root_ / metas[0].case_id, dir / metas[0].case_id);
  fs::remove(dir / metas[0].case_id / "labels.csv");
  EXPECT_THROW(hs::load_case(dir, metas[0].case_id), windmil::DataError);
  EXPECT_THROW(hs::list_cases(dir), windmil::DataError);  // no index.json
}

TEST_F(SmallDataset, AugmentSymCarriesLabelsConsistentWithOracle) {
  const auto metas = hs::list_cases(root_);
  std::vector<hs::LoadedCase> loaded;
  for (const auto& m : metas) loaded.push_back(hs::load_case(root_, m.case_id));
  std::vector<const hs::LoadedCase*> ptrs;
  for (const auto& l : loaded) ptrs.push_back(&l);
  const auto plain = hs::make_eval_cases(ptrs, md::Target::kCpMean);
  const auto sym = hs::augment_sym(plain);
  ASSERT_EQ(sym.size(), 2 * plain.size());
  for (std::size_t i = 0; i < plain.size(); ++i) {
    const auto& mirrored = sym[plain.size() + i];
    EXPECT_EQ(mirrored.target, plain[i].target);
    EXPECT_EQ(gr::reflect_features(mirrored.features), plain[i].features);
    const auto relabeled = windmil::oracle::pseudo_cp(mirrored.features, -loaded[i].meta.angle_deg);
    for (std::size_t v = 0; v < relabeled.size(); ++v) {
      EXPECT_NEAR(relabeled.cp_mean[v], loaded[i].labels.cp_mean[v], 1e-12);
      EXPECT_NEAR(relabeled.cp_std[v], loaded[i].labels.cp_std[v], 1e-12);
    }
  }
}

TEST_F(SmallDataset, EvaluateEquivariantIsSymInvariant) {
  const auto metas = hs::list_cases(root_);
  std::vector<hs::LoadedCase> loaded;
  for (int i = 0; i < 6; ++i) loaded.push_back(hs::load_case(root_, metas[i * 5].case_id));
  std::vector<const hs::LoadedCase*> ptrs;
  for (const auto& l : loaded) ptrs.push_back(&l);
  const auto plain = hs::make_eval_cases(ptrs, md::Target::kCpStd);
  const auto sym = hs::augment_sym(plain);
  md::ModelConfig c;
  c.hidden_dim = 8;
  c.num_layers = 2;
  c.target = md::Target::kCpStd;
  c.mode = md::Mode::kEquivariant;
  const auto p = md::init_params(c);
  const auto a = hs::evaluate(p, c, plain, false);
  const auto b = hs::evaluate(p, c, sym, true);
  EXPECT_NEAR(a.rmse, b.rmse, 1e-9);
  EXPECT_NEAR(a.mae, b.mae, 1e-9);
  EXPECT_NEAR(a.r2, b.r2, 1e-9);
  EXPECT_NEAR(a.hitrate_pct, b.hitrate_pct, 1e-9);
  EXPECT_EQ(b.count, 2 * a.count);

  c.mode = md::Mode::kBaseline;
  const auto u = hs::evaluate(p, c, sym, true);
  EXPECT_TRUE(std::isfinite(u.rmse) && std::isfinite(u.r2));
  const auto u2 = hs::evaluate(p, c, sym, true);
  EXPECT_EQ(u.rmse, u2.rmse);
}

TEST_F(SmallDataset, RunExperimentWritesEightRowsDeterministically) {
  hs::ExperimentConfig cfg;
  cfg.dataset = root_;
  cfg.split_kind = hs::SplitKind::kExtrapolation;
  cfg.split_seed = 3;
  cfg.model.hidden_dim = 8;
  cfg.model.num_layers = 1;
  cfg.model.seed = 5;
  cfg.train.max_epochs = 2;
  cfg.train.patience = 2;
  cfg.out_dir = fs::temp_directory_path() / "windmil_exp_a";
  fs::remove_all(cfg.out_dir);
  const auto a = hs::run_experiment(cfg);
  ASSERT_EQ(a.rows.size(), 8u);
  const std::vector<std::pair<md::Mode, bool>> order = {
      {md::Mode::kBaseline, false}, {md::Mode::kBaseline, true},
      {md::Mode::kEquivariant, false}, {md::Mode::kEquivariant, true}};
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_EQ(a.rows[i].mode, order[i % 4].first);
    EXPECT_EQ(a.rows[i].metrics.sym_augmented, order[i % 4].second);
    EXPECT_EQ(a.rows[i].metrics.target, i < 4 ? md::Target::kCpMean : md::Target::kCpStd);
  }
  for (auto t : {md::Target::kCpMean, md::Target::kCpStd}) {
    EXPECT_LT(std::abs(*hs::hitrate_gap(a, md::Mode::kEquivariant, t)), 0.1);
  }
  EXPECT_TRUE(fs::exists(cfg.out_dir / "report.md"));
  EXPECT_TRUE(fs::exists(cfg.out_dir / "split.json"));
  EXPECT_TRUE(fs::exists(cfg.out_dir / "ckpt" / "equivariant-cp_std.bin"));
  const auto j = nlohmann::json::parse(slurp(cfg.out_dir / "report.json"));
  EXPECT_TRUE(j["complete"].get<bool>());
  EXPECT_EQ(j["split"]["train_hash"].get<std::uint64_t>(), hs::hash_ids(a.split.train));
  EXPECT_EQ(hs::read_split(cfg.out_dir / "split.json"), a.split);

  auto cfg_b = cfg;
  cfg_b.out_dir = fs::temp_directory_path() / "windmil_exp_b";
  fs::remove_all(cfg_b.out_dir);
  hs::run_experiment(cfg_b);
  EXPECT_EQ(slurp(cfg.out_dir / "report.json"), slurp(cfg_b.out_dir / "report.json"));
}

TEST(ExperimentConfig, JsonRoundTripAndDefaults) {
  const auto j = nlohmann::json::parse(R"({
    "dataset": "cases", "out": "run1",
    "split": {"kind": "extrapolation", "seed": 9},
    "model": {"hidden_dim": 16, "num_layers": 2, "seed": 4},
    "train": {"max_epochs": 5, "patience": 2}
  })");
  const auto c = hs::experiment_config_from_json(j, "/base");
  EXPECT_EQ(c.dataset, fs::path("/base/cases"));
  EXPECT_EQ(c.out_dir, fs::path("/base/run1"));
  EXPECT_EQ(c.split_kind, hs::SplitKind::kExtrapolation);
  EXPECT_EQ(c.model.hidden_dim, 16);
  EXPECT_EQ(c.model.activation, md::Activation::kRelu);
  EXPECT_EQ(c.train.max_epochs, 5);
  EXPECT_EQ(c.train.learning_rate, 1e-3);
  EXPECT_EQ(c.targets.size(), 2u);
  EXPECT_THROW(hs::experiment_config_from_json(nlohmann::json::parse(R"({"dataset": "x", "modes": ["fancy"]})")),
               windmil::ConfigError);
}

TEST(Contours, RoundTripAndErrorField) {
  auto mesh = windmil::geometry::make_icosphere(1.0, 1);
  const std::size_t n = mesh.vertices.size();
  std::vector<double> pred(n), target(n);
  for (std::size_t i = 0; i < n; ++i) {
    pred[i] = 0.1 * static_cast<double>(i) - 1.0;
    target[i] = std::sin(static_cast<double>(i));
  }
  const auto path = fs::temp_directory_path() / "windmil_contours.vtk";
  hs::export_contours(mesh, pred, target, path);
  const auto d = hs::read_vtk_polydata(path);
  EXPECT_EQ(d.points.size(), n);
  EXPECT_EQ(d.polygons.size(), mesh.faces.size());
  EXPECT_EQ(d.point_scalars.at("cp_pred"), pred);
  EXPECT_EQ(d.point_scalars.at("cp_true"), target);
  for (double e : d.point_scalars.at("cp_abs_err")) EXPECT_GE(e, 0.0);

  hs::export_contours(mesh, target, target, path);
  const auto exact = hs::read_vtk_polydata(path);
  for (double e : exact.point_scalars.at("cp_abs_err")) EXPECT_EQ(e, 0.0);

  EXPECT_THROW(hs::export_contours(mesh, target, target, "/nonexistent_dir/x.vtk"), windmil::IoError);
  EXPECT_THROW(hs::export_contours(mesh, std::vector<double>(n - 1), target, path), windmil::ShapeError);
}
