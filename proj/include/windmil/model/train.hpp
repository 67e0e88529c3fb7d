#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "windmil/model/model.hpp"

namespace windmil::model {

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int max_epochs = 200;
  int patience = 20;

  bool operator==(const TrainConfig&) const = default;
};

/// Throws ConfigError unless learning_rate > 0, 0 <= patience <= max_epochs
/// and max_epochs >= 1.
void validate(const TrainConfig& tc);

nlohmann::json to_json(const TrainConfig& tc);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct AdamState {
  ModelParams m;
  ModelParams v;
  long step = 0;
};

AdamState make_adam_state(const ModelParams& p);

/// Bias-corrected Adam update of every tensor in place.
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state,
               const TrainConfig& tc);

/// One graph with the per-node regression target for the configured model.
struct LabeledCase {
  const graph::SurfaceGraph* graph = nullptr;
  Eigen::VectorXd target;
};

struct EpochRecord {
  int epoch = 0;           // 1-based
  double train_loss = 0.0;  // mean over train cases of the per-case MSE
  double dev_rmse = 0.0;    // pooled over dev nodes
};

struct TrainResult {
  ModelParams params;  // best dev RMSE
  std::vector<EpochRecord> history;
  int best_epoch = 0;
};

/// Pooled RMSE of forward() over every node of `cases`.
double pooled_rmse(std::span<const LabeledCase> cases, const ModelParams& p, const ModelConfig& c);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// One optimizer step per train case in a seeded shuffled order each epoch.
/// Stops once `patience` epochs pass without a strictly lower dev RMSE.
TrainResult train(std::span<const LabeledCase> train_cases, std::span<const LabeledCase> dev_cases,
                  const ModelConfig& c, const TrainConfig& tc, const EpochCallback& on_epoch = {});

// Checkpoint: "WMLM", u32 version, u32 length + JSON {"model": ..., "train": ...},
// u32 tensor count, then per tensor u32 rows, u32 cols and rows*cols f64 in
// row-major order. Little-endian.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig model;
  TrainConfig train;
  ModelParams params;
};

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ck);
Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace windmil::model
