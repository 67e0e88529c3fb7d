#include "windmil/model/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "windmil/binary_io.hpp"
#include "windmil/error.hpp"

namespace windmil::model {

void validate(const TrainConfig& tc) {
  if (!(tc.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (tc.max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (tc.patience < 0 || tc.patience > tc.max_epochs) {
    throw ConfigError("patience must lie in [0, max_epochs]");
  }
  if (!(tc.beta1 >= 0.0 && tc.beta1 < 1.0 && tc.beta2 >= 0.0 && tc.beta2 < 1.0)) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (!(tc.epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
}

nlohmann::json to_json(const TrainConfig& tc) {
  return {{"learning_rate", tc.learning_rate}, {"beta1", tc.beta1},
          {"beta2", tc.beta2},                 {"epsilon", tc.epsilon},
          {"max_epochs", tc.max_epochs},       {"patience", tc.patience},
          {"loss", "mse"},                     {"optimizer", "adam"}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig tc;
  try {
    tc.learning_rate = j.value("learning_rate", tc.learning_rate);
    tc.beta1 = j.value("beta1", tc.beta1);
    tc.beta2 = j.value("beta2", tc.beta2);
    tc.epsilon = j.value("epsilon", tc.epsilon);
    tc.max_epochs = j.value("max_epochs", tc.max_epochs);
    tc.patience = j.value("patience", tc.patience);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  validate(tc);
  return tc;
}

AdamState make_adam_state(const ModelParams& p) { return {zeros_like(p), zeros_like(p), 0}; }

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state,
               const TrainConfig& tc) {
  ++state.step;
  const double c1 = 1.0 - std::pow(tc.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(tc.beta2, static_cast<double>(state.step));
  auto p = params.tensors();
  auto g = grads.tensors();
  auto m = state.m.tensors();
  auto v = state.v.tensors();
  if (g.size() != p.size() || m.size() != p.size() || v.size() != p.size()) {
    throw ShapeError("adam: gradient/state layout differs from params");
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto pa = p[i]->array();
    const auto ga = g[i]->array();
    auto ma = m[i]->array();
    auto va = v[i]->array();
    ma = tc.beta1 * ma + (1.0 - tc.beta1) * ga;
    va = tc.beta2 * va + (1.0 - tc.beta2) * ga.square();
    pa -= tc.learning_rate * (ma / c1) / ((va / c2).sqrt() + tc.epsilon);
  }
}

double pooled_rmse(std::span<const LabeledCase> cases, const ModelParams& p, const ModelConfig& c) {
  double ss = 0.0;
  std::size_t n = 0;
  for (const auto& lc : cases) {
    const Eigen::VectorXd pred = forward(*lc.graph, lc.graph->features, p, c);
    ss += (pred - lc.target).squaredNorm();
    n += static_cast<std::size_t>(pred.size());
  }
  if (n == 0) throw ConfigError("pooled_rmse: no nodes");
  return std::sqrt(ss / static_cast<double>(n));
}

TrainResult train(std::span<const LabeledCase> train_cases, std::span<const LabeledCase> dev_cases,
                  const ModelConfig& c, const TrainConfig& tc, const EpochCallback& on_epoch) {
  validate(c);
  validate(tc);
  if (train_cases.empty()) throw ConfigError("train split is empty");
  if (dev_cases.empty()) throw ConfigError("dev split is empty");

  ModelParams params = init_params(c);
  AdamState state = make_adam_state(params);
  std::mt19937_64 rng(c.seed ^ 0x5851f42d4c957f2dULL);
  std::vector<std::size_t> order(train_cases.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  result.params = params;
  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;
  for (int epoch = 1; epoch <= tc.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t idx : order) {
      const LabeledCase& lc = train_cases[idx];
      LossAndGrads lg;
      try {
        lg = loss_and_gradients(*lc.graph, lc.graph->features, lc.target, params, c);
      } catch (const TrainingError&) {
        throw TrainingError("non-finite loss on case " + lc.graph->case_id, epoch);
      }
      loss_sum += lg.loss;
      adam_step(params, lg.grads, state, tc);
    }
    if (!params.all_finite()) throw TrainingError("parameters diverged", epoch);
    EpochRecord rec{epoch, loss_sum / static_cast<double>(order.size()),
                    pooled_rmse(dev_cases, params, c)};
    if (!std::isfinite(rec.dev_rmse)) throw TrainingError("dev RMSE is not finite", epoch);
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (rec.dev_rmse < best) {
      best = rec.dev_rmse;
      result.params = params;
      result.best_epoch = epoch;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (since_best >= tc.patience) break;
  }
  return result;
}

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ck) {
  check_shapes(ck.params, ck.model);
  ByteWriter w;
  w.put_bytes("WMLM");
  w.put<std::uint32_t>(kCheckpointVersion);
  const std::string meta = nlohmann::json{{"model", to_json(ck.model)}, {"train", to_json(ck.train)}}.dump();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(meta.size()));
  w.put_bytes(meta);
  const auto tensors = ck.params.tensors();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(tensors.size()));
  for (const Matrix* m : tensors) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(m->rows()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(m->cols()));
    for (Eigen::Index r = 0; r < m->rows(); ++r)
      for (Eigen::Index col = 0; col < m->cols(); ++col) w.put<double>((*m)(r, col));
  }
  return w.take();
}

Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.get_bytes(4) != "WMLM") throw FormatError("bad checkpoint magic");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const std::string meta = r.get_bytes(r.get<std::uint32_t>());
  Checkpoint ck;
  try {
    const auto j = nlohmann::json::parse(meta);
    ck.model = model_config_from_json(j.at("model"));
    ck.train = train_config_from_json(j.at("train"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint config: ") + e.what());
  }
  const auto count = r.get<std::uint32_t>();
  const std::size_t expected = 1 + 5 * static_cast<std::size_t>(ck.model.num_layers) + 4;
  if (count != expected) {
    throw ConfigMismatchError("checkpoint holds " + std::to_string(count) + " tensors, config implies " +
                              std::to_string(expected));
  }
  ck.params.layers.resize(static_cast<std::size_t>(ck.model.num_layers));
  for (Matrix* m : ck.params.tensors()) {
    const auto rows = r.get<std::uint32_t>();
    const auto cols = r.get<std::uint32_t>();
    if (r.remaining() < static_cast<std::size_t>(rows) * cols * 8) throw FormatError("checkpoint truncated");
    m->resize(rows, cols);
    for (std::uint32_t i = 0; i < rows; ++i)
      for (std::uint32_t j = 0; j < cols; ++j) (*m)(i, j) = r.get<double>();
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after checkpoint tensors");
  check_shapes(ck.params, ck.model);
  return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  write_file_bytes(path, serialize_checkpoint(ck));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(read_file_bytes(path));
}

}  // namespace windmil::model
