#pragma once

#include <span>

#include <json.hpp>

#include "windmil/model/model.hpp"

namespace windmil::harness {

struct MetricReport {
  model::Target target = model::Target::kCpMean;
  bool sym_augmented = false;
  double tolerance = 0.0;
  std::size_t count = 0;
  double rmse = 0.0;
  double mse = 0.0;
  double mae = 0.0;
  double r2 = 0.0;  // NaN when the targets have zero variance
  bool r2_defined = true;
  double hitrate_pct = 0.0;
};

/// Hitrate tolerance per target: 0.10 for cp_mean, 0.05 for cp_std.
double default_tolerance(model::Target t);

/// Pooled per-node metrics. mse is the mean squared error and rmse its
/// square root; a node is a hit when |pred - target| <= tolerance.
MetricReport compute_metrics(std::span<const double> pred, std::span<const double> target, double tolerance);

nlohmann::json to_json(const MetricReport& m);

}  // namespace windmil::harness
