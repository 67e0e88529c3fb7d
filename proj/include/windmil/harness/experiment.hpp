#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "windmil/harness/dataset.hpp"
#include "windmil/harness/metrics.hpp"
#include "windmil/harness/split.hpp"
#include "windmil/model/train.hpp"

namespace windmil::harness {

/// A graph to score: features may be the reflected copy of graph->features.
struct EvalCase {
  std::string case_id;
  const graph::SurfaceGraph* graph = nullptr;
  graph::FeatureTable features;
  Eigen::VectorXd target;
};

/// Plain test cases for one target, in the given order.
std::vector<EvalCase> make_eval_cases(const std::vector<const LoadedCase*>& cases, model::Target t);

/// `test` followed by one mirrored copy per case: reflected features, same
/// adjacency, labels carried over node for node.
std::vector<EvalCase> augment_sym(const std::vector<EvalCase>& test);

/// Pooled metrics of the model over every node of `cases`.
MetricReport evaluate(const model::ModelParams& p, const model::ModelConfig& c,
                      const std::vector<EvalCase>& cases, bool sym_augmented);

struct ExperimentConfig {
  std::filesystem::path dataset;
  std::filesystem::path out_dir;
  SplitKind split_kind = SplitKind::kInterpolation;
  std::uint64_t split_seed = 0;
  std::array<double, 3> fractions{0.70, 0.15, 0.15};
  double extrapolation_train_fraction = 0.8;
  std::filesystem::path split_file;  // when set, overrides the generated split
  model::ModelConfig model;          // mode and target are overridden per run
  model::TrainConfig train;
  std::vector<model::Target> targets{model::Target::kCpMean, model::Target::kCpStd};
  std::vector<model::Mode> modes{model::Mode::kBaseline, model::Mode::kEquivariant};
};

nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig read_experiment_config(const std::filesystem::path& path);

struct ReportRow {
  model::Mode mode = model::Mode::kBaseline;
  MetricReport metrics;
};

struct ModelRun {
  model::Mode mode = model::Mode::kBaseline;
  model::Target target = model::Target::kCpMean;
  int best_epoch = 0;
  std::vector<model::EpochRecord> history;
};

struct ReportBundle {
  ExperimentConfig config;
  SplitSpec split;
  std::vector<ReportRow> rows;  // per target: baseline, baseline+Sym, equivariant, equivariant+Sym
  std::vector<ModelRun> runs;
  bool complete = false;
};

/// Hitrate(+Sym) - hitrate for the given mode and target, in percentage points.
std::optional<double> hitrate_gap(const ReportBundle& b, model::Mode mode, model::Target target);

nlohmann::json to_json(const ReportBundle& b);
std::string render_markdown(const ReportBundle& b);

/// Writes report.json and report.md under out_dir.
void write_report(const ReportBundle& b, const std::filesystem::path& out_dir);

using LogFn = std::function<void(const std::string&)>;

/// Split, train every (target, mode) pair, evaluate each with and without
/// +Sym, and write split.json, checkpoints and the report. The report is
/// rewritten after every model, so a failure leaves the finished rows on disk.
ReportBundle run_experiment(const ExperimentConfig& cfg, const LogFn& log = {});

}  // namespace windmil::harness
