#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "windmil/graph/surface_graph.hpp"

namespace windmil::oracle {

struct FlowConditions {
  double p_inf = 0.0;  // Pa
  double rho = 1.225;  // kg/m^3
  double u_inf = 1.0;  // m/s
  double theta_deg = 0.0;
};

/// Throws DomainError unless rho > 0 and u_inf > 0.
void validate(const FlowConditions& fc);

enum class LabelSource { kOracle, kIngested };

struct CpLabels {
  std::vector<double> cp_mean;
  std::vector<double> cp_std;
  LabelSource source = LabelSource::kOracle;

  std::size_t size() const { return cp_mean.size(); }
  bool operator==(const CpLabels&) const = default;
};

/// Unit wind direction in the horizontal plane: (cos t, 0, sin t).
Eigen::Vector3d wind_vector(double theta_deg);

/// Analytic stand-in for LES statistics. With d = n . w(theta):
///   cp_mean = 0.8 (-d)(0.3 + 0.7 y) - 0.5 (1 - d^2) + 0.2 tanh(3 z w_z)
///   cp_std  = 0.25 sqrt(1 - d^2)(0.4 + 0.6 y) + 0.05 (1 + tanh(3 z w_z)) / 2
/// where y, z are the normalized node coordinates. Every term is unchanged by
/// (z, n_z, theta) -> (-z, -n_z, -theta).
CpLabels pseudo_cp(const graph::SurfaceGraph& g, double theta_deg);
CpLabels pseudo_cp(const graph::FeatureTable& features, double theta_deg);

struct CpStats {
  double mean = 0.0;
  double std = 0.0;
};

/// cp = (p - p_inf) / (rho u_inf^2 / 2) per sample; returns the sample mean
/// and the population (1/N) standard deviation.
CpStats cp_from_pressure(std::span<const double> p_series, const FlowConditions& fc);

/// Converts precomputed pressure statistics (Pa) to cp statistics. The std
/// scales by the dynamic pressure only.
CpStats cp_from_pressure_stats(double p_mean, double p_std, const FlowConditions& fc);

// labels.csv: header `node_id,cp_mean,cp_std,source`.
void write_labels_csv(const CpLabels& labels, const std::filesystem::path& path);
CpLabels read_labels_csv(const std::filesystem::path& path);

/// Ingestion input: CSV with `node_id,p_mean,p_std` plus FlowConditions JSON
/// ({"p_inf", "rho", "u_inf", "theta_deg"}), or a direct `node_id,cp_mean,cp_std`
/// table (sidecar ignored). Rows may come in any order but must cover
/// 0..node_count-1 exactly once.
CpLabels ingest_csv(const std::filesystem::path& csv, std::size_t node_count,
                    const std::filesystem::path& flow_json = {});
FlowConditions read_flow_conditions(const std::filesystem::path& path);

std::string to_string(LabelSource s);

}  // namespace windmil::oracle
