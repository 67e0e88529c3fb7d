#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "windmil/graph/surface_graph.hpp"
#include "windmil/model/tape.hpp"

namespace windmil::model {

enum class Mode { kBaseline, kEquivariant };
enum class Target { kCpMean, kCpStd };

std::string to_string(Mode m);
std::string to_string(Target t);
std::string to_string(Activation a);
Mode parse_mode(const std::string& s);
Target parse_target(const std::string& s);
Activation parse_activation(const std::string& s);

struct ModelConfig {
  int hidden_dim = 128;
  int num_layers = 4;
  Activation activation = Activation::kRelu;
  Mode mode = Mode::kBaseline;
  Target target = Target::kCpMean;
  std::uint64_t seed = 0;
  bool layer_norm = true;  // off only in tests

  bool operator==(const ModelConfig&) const = default;
};

/// Throws ConfigError unless hidden_dim >= 1 and num_layers >= 1.
void validate(const ModelConfig& c);

nlohmann::json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);

struct LayerParams {
  Matrix w_self;  // H x H
  Matrix w_nbr;   // H x H
  Matrix bias;    // 1 x H
  Matrix ln_gain;   // 1 x H
  Matrix ln_shift;  // 1 x H

  bool operator==(const LayerParams&) const = default;
};

struct ModelParams {
  Matrix w_in;  // 6 x H, no bias
  std::vector<LayerParams> layers;
  Matrix head_w1;  // H x H
  Matrix head_b1;  // 1 x H
  Matrix head_w2;  // H x 1
  Matrix head_b2;  // 1 x 1

  bool operator==(const ModelParams&) const = default;

  /// Tensors in declaration order: w_in, then per layer (w_self, w_nbr, bias,
  /// ln_gain, ln_shift), then head_w1, head_b1, head_w2, head_b2.
  std::vector<Matrix*> tensors();
  std::vector<const Matrix*> tensors() const;
  std::size_t parameter_count() const;
  bool all_finite() const;
};

/// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)) from a seeded generator;
/// biases 0, layer-norm gain 1 and shift 0.
ModelParams init_params(const ModelConfig& c);

/// Zero tensors shaped like `p`.
ModelParams zeros_like(const ModelParams& p);

/// Throws ConfigMismatchError unless every tensor has the shape `c` implies.
void check_shapes(const ModelParams& p, const ModelConfig& c);

using Embedding = Matrix;

/// One message-passing layer:
///   h_v = act(LN(x_v W_self + mean_{u in N(v)} x_u W_nbr + b)),  out_v = h_v + x_v.
/// Isolated nodes aggregate the zero vector.
Embedding sage_layer(const Embedding& x, const graph::SurfaceGraph& g, const LayerParams& layer,
                     const ModelConfig& c);

/// x0 = X W_in, then num_layers sage_layers, returning x^L + x0.
Embedding encode(const graph::SurfaceGraph& g, const graph::FeatureTable& x, const ModelParams& p,
                 const ModelConfig& c);

/// (encode(X) + encode(reflect(X))) / 2 with shared params.
Embedding symmetrize_encode(const graph::SurfaceGraph& g, const graph::FeatureTable& x,
                            const ModelParams& p, const ModelConfig& c);

/// Per-node scalar prediction; c.mode selects encode or symmetrize_encode.
Eigen::VectorXd forward(const graph::SurfaceGraph& g, const graph::FeatureTable& x,
                        const ModelParams& p, const ModelConfig& c);

struct LossAndGrads {
  double loss = 0.0;
  ModelParams grads;
};

/// Mean squared error over nodes and its gradient for every tensor. Throws
/// TrainingError when the loss is not finite.
LossAndGrads loss_and_gradients(const graph::SurfaceGraph& g, const graph::FeatureTable& x,
                                const Eigen::VectorXd& targets, const ModelParams& p,
                                const ModelConfig& c);

/// Number of symmetrize_encode evaluations (including those made inside
/// forward and loss_and_gradients) in this process.
std::uint64_t symmetrize_call_count();

}  // namespace windmil::model
