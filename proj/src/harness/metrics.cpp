#include "windmil/harness/metrics.hpp"

#include <cmath>
#include <limits>

#include "windmil/error.hpp"

namespace windmil::harness {

double default_tolerance(model::Target t) { return t == model::Target::kCpMean ? 0.10 : 0.05; }

MetricReport compute_metrics(std::span<const double> pred, std::span<const double> target, double tolerance) {
  if (pred.size() != target.size()) throw ShapeError("prediction and target lengths differ");
  if (pred.empty()) throw ShapeError("no values to score");
  if (!(tolerance >= 0.0)) throw DomainError("tolerance must be >= 0");
  const double n = static_cast<double>(pred.size());
  double target_sum = 0.0;
  for (double t : target) target_sum += t;
  const double target_mean = target_sum / n;

  double ss_res = 0.0, ss_tot = 0.0, abs_sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - target[i];
    ss_res += e * e;
    abs_sum += std::abs(e);
    hits += std::abs(e) <= tolerance ? 1 : 0;
    const double d = target[i] - target_mean;
    ss_tot += d * d;
  }
  MetricReport m;
  m.tolerance = tolerance;
  m.count = pred.size();
  m.mse = ss_res / n;
  m.rmse = std::sqrt(m.mse);
  m.mae = abs_sum / n;
  m.r2_defined = ss_tot > 0.0;
  m.r2 = m.r2_defined ? 1.0 - ss_res / ss_tot : std::numeric_limits<double>::quiet_NaN();
  m.hitrate_pct = 100.0 * static_cast<double>(hits) / n;
  return m;
}

nlohmann::json to_json(const MetricReport& m) {
  return {{"target", model::to_string(m.target)},
          {"sym_augmented", m.sym_augmented},
          {"tolerance", m.tolerance},
          {"node_count", m.count},
          {"rmse", m.rmse},
          {"mse", m.mse},
          {"mae", m.mae},
          {"r2", m.r2_defined ? nlohmann::json(m.r2) : nlohmann::json(nullptr)},
          {"r2_defined", m.r2_defined},
          {"hitrate_pct", m.hitrate_pct}};
}

}  // namespace windmil::harness
