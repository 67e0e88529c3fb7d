#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "windmil/error.hpp"
#include "windmil/oracle/labels.hpp"

namespace gr = windmil::graph;
namespace orc = windmil::oracle;

namespace {

gr::FeatureTable one_node(double y, double z, double nx, double ny, double nz) {
  gr::FeatureTable x(1, 6);
  x << 0.0, y, z, nx, ny, nz;
  return x;
}

gr::FeatureTable random_features(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  gr::FeatureTable x(n, 6);
  for (int r = 0; r < n; ++r) {
    Eigen::Vector3d nrm(u(rng), u(rng), u(rng));
    nrm.normalize();
    x.row(r) << u(rng) * 1.5, 0.5 * (u(rng) + 1.0), u(rng) * 1.5, nrm.x(), nrm.y(), nrm.z();
  }
  return x;
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "windmil_oracle_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

}  // namespace

TEST(WindVector, Conventions) {
  EXPECT_EQ(orc::wind_vector(0.0), Eigen::Vector3d(1, 0, 0));
  EXPECT_TRUE(orc::wind_vector(90.0).isApprox(Eigen::Vector3d(0, 0, 1), 1e-12));
  EXPECT_NEAR((orc::wind_vector(90.0) - Eigen::Vector3d(0, 0, 1)).norm(), 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(orc::wind_vector(-45.0).z(), -orc::wind_vector(45.0).z());
}

TEST(PseudoCp, WindwardWallNode) {
  const auto l = orc::pseudo_cp(one_node(1.0, 0.0, -1, 0, 0), 0.0);
  EXPECT_NEAR(l.cp_mean[0], 0.8, 1e-15);
  // The formula gives 0.25*0*1 + 0.05*(1+0)/2 = 0.025 when d = -1.
  EXPECT_NEAR(l.cp_std[0], 0.025, 1e-15);
  EXPECT_EQ(l.source, orc::LabelSource::kOracle);
}

TEST(PseudoCp, RoofNode) {
  const auto l = orc::pseudo_cp(one_node(1.0, 0.0, 0, 1, 0), 0.0);
  EXPECT_NEAR(l.cp_mean[0], -0.5, 1e-15);
  EXPECT_NEAR(l.cp_std[0], 0.275, 1e-15);
}

TEST(PseudoCp, ReflectionConsistency) {
  const auto x = random_features(500, 17);
  for (double theta : {0.0, 15.0, 30.0, 45.0, 60.0, 75.0, 90.0, -30.0}) {
    const auto a = orc::pseudo_cp(x, theta);
    const auto b = orc::pseudo_cp(gr::reflect_features(x), -theta);
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_NEAR(a.cp_mean[i], b.cp_mean[i], 1e-12);
      EXPECT_NEAR(a.cp_std[i], b.cp_std[i], 1e-12);
    }
  }
}

TEST(PseudoCp, PlusAndMinusFortyFiveDiffer) {
  const auto x = random_features(200, 5);
  const auto a = orc::pseudo_cp(x, 45.0);
  const auto b = orc::pseudo_cp(x, -45.0);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a.cp_mean[i] - b.cp_mean[i]));
  EXPECT_GT(worst, 0.01);
}

TEST(PseudoCp, StdNonNegativeAndFinite) {
  const auto x = random_features(2000, 23);
  for (double theta = -90; theta <= 90; theta += 15) {
    const auto l = orc::pseudo_cp(x, theta);
    for (std::size_t i = 0; i < l.size(); ++i) {
      EXPECT_TRUE(std::isfinite(l.cp_mean[i]));
      EXPECT_GE(l.cp_std[i], 0.0);
      EXPECT_LE(l.cp_std[i], 0.30 + 1e-12);  // 0.25 * 1 * 1 + 0.05
    }
  }
  // |n . w| slightly above 1 from rounding must not yield NaN.
  const auto l = orc::pseudo_cp(one_node(0.5, 0.0, -1.0000000000000002, 0, 0), 0.0);
  EXPECT_TRUE(std::isfinite(l.cp_std[0]));
}

TEST(PseudoCp, RejectsWrongWidth) {
  EXPECT_THROW(orc::pseudo_cp(gr::FeatureTable::Zero(2, 5), 0.0), windmil::ShapeError);
}

TEST(CpFromPressure, WorkedExamples) {
  orc::FlowConditions fc;
  fc.p_inf = 101325.0;
  fc.rho = 1.2;
  fc.u_inf = 10.0;
  const double q = 0.5 * fc.rho * fc.u_inf * fc.u_inf;

  const std::vector<double> flat(5, fc.p_inf);
  auto s = orc::cp_from_pressure(flat, fc);
  EXPECT_DOUBLE_EQ(s.mean, 0.0);
  EXPECT_DOUBLE_EQ(s.std, 0.0);

  const std::vector<double> stag(4, fc.p_inf + q);
  s = orc::cp_from_pressure(stag, fc);
  EXPECT_NEAR(s.mean, 1.0, 1e-12);
  EXPECT_NEAR(s.std, 0.0, 1e-12);

  const std::vector<double> pair = {fc.p_inf, fc.p_inf + q};
  s = orc::cp_from_pressure(pair, fc);
  EXPECT_NEAR(s.mean, 0.5, 1e-12);
  EXPECT_NEAR(s.std, 0.5, 1e-12);
}

TEST(CpFromPressure, Errors) {
  orc::FlowConditions fc;
  EXPECT_THROW(orc::cp_from_pressure(std::vector<double>{}, fc), windmil::DomainError);
  fc.u_inf = 0.0;
  EXPECT_THROW(orc::cp_from_pressure(std::vector<double>{1.0}, fc), windmil::DomainError);
  fc.u_inf = 1.0;
  fc.rho = -1.0;
  EXPECT_THROW(orc::cp_from_pressure_stats(0.0, 0.0, fc), windmil::DomainError);
}

TEST(LabelsCsv, RoundTripIsBitExact) {
  const auto l = orc::pseudo_cp(random_features(100, 3), 30.0);
  const auto p = scratch("labels.csv");
  orc::write_labels_csv(l, p);
  EXPECT_EQ(orc::read_labels_csv(p), l);
  std::ifstream in(p);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "node_id,cp_mean,cp_std,source");
}

TEST(LabelsCsv, RejectsMalformed) {
  const auto p = scratch("bad.csv");
  write_text(p, "node,cp_mean,cp_std,source\n0,1,1,oracle\n");
  EXPECT_THROW(orc::read_labels_csv(p), windmil::FormatError);
  write_text(p, "node_id,cp_mean,cp_std,source\n0,1,-1,oracle\n");
  EXPECT_THROW(orc::read_labels_csv(p), windmil::FormatError);
  write_text(p, "node_id,cp_mean,cp_std,source\n1,1,1,oracle\n");
  EXPECT_THROW(orc::read_labels_csv(p), windmil::FormatError);
  write_text(p, "node_id,cp_mean,cp_std,source\n0,abc,1,oracle\n");
  EXPECT_THROW(orc::read_labels_csv(p), windmil::FormatError);
}

TEST(Ingest, PressureStatisticsWithSidecar) {
  const auto csv = scratch("p.csv");
  const auto flow = scratch("flow.json");
  write_text(csv, "node_id,p_mean,p_std\n1,100.6125,1.225\n0,100,0\n");
  write_text(flow, R"({"p_inf": 100.0, "rho": 1.225, "u_inf": 1.0, "theta_deg": 15})");
  const auto l = orc::ingest_csv(csv, 2, flow);
  EXPECT_EQ(l.source, orc::LabelSource::kIngested);
  EXPECT_NEAR(l.cp_mean[0], 0.0, 1e-12);
  EXPECT_NEAR(l.cp_mean[1], 1.0, 1e-12);
  EXPECT_NEAR(l.cp_std[1], 2.0, 1e-12);
}

TEST(Ingest, DirectCpTable) {
  const auto csv = scratch("cp.csv");
  write_text(csv, "node_id,cp_mean,cp_std\n0,0.3,0.1\n1,-0.2,0.05\n");
  const auto l = orc::ingest_csv(csv, 2);
  EXPECT_DOUBLE_EQ(l.cp_mean[1], -0.2);
  EXPECT_DOUBLE_EQ(l.cp_std[0], 0.1);
}

TEST(Ingest, Errors) {
  const auto csv = scratch("e.csv");
  write_text(csv, "node_id,p_mean,p_std\n0,1,0\n");
  EXPECT_THROW(orc::ingest_csv(csv, 1), windmil::ConfigError);
  write_text(csv, "node_id,cp_mean,cp_std\n0,1,0\n");
  EXPECT_THROW(orc::ingest_csv(csv, 2), windmil::FormatError);
  write_text(csv, "node_id,cp_mean,cp_std\n0,1,0\n0,1,0\n");
  EXPECT_THROW(orc::ingest_csv(csv, 2), windmil::FormatError);
  write_text(csv, "node_id,cp_mean,cp_std\n5,1,0\n");
  EXPECT_THROW(orc::ingest_csv(csv, 1), windmil::FormatError);
  write_text(csv, "a,b\n");
  EXPECT_THROW(orc::ingest_csv(csv, 1), windmil::FormatError);
  const auto flow = scratch("badflow.json");
  write_text(csv, "node_id,p_mean,p_std\n0,1,0\n");
  write_text(flow, R"({"p_inf": 0, "rho": 1.2, "u_inf": 0})");
  EXPECT_THROW(orc::ingest_csv(csv, 1, flow), windmil::DomainError);
}
