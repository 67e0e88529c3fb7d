#include "windmil/model/model.hpp"

#include <array>
#include <atomic>
#include <cmath>
#include <random>

#include "windmil/error.hpp"

namespace windmil::model {

namespace {

std::atomic<std::uint64_t> g_symmetrize_calls{0};

struct LayerIds {
  Tape::Id w_self, w_nbr, bias, ln_gain, ln_shift;
};

struct ParamIds {
  Tape::Id w_in;
  std::vector<LayerIds> layers;
  Tape::Id head_w1, head_b1, head_w2, head_b2;
};

ParamIds put_params(Tape& t, const ModelParams& p, bool trainable) {
  auto put = [&](const Matrix& m) { return trainable ? t.variable(m) : t.constant(m); };
  ParamIds ids;
  ids.w_in = put(p.w_in);
  for (const auto& l : p.layers) {
    ids.layers.push_back({put(l.w_self), put(l.w_nbr), put(l.bias), put(l.ln_gain), put(l.ln_shift)});
  }
  ids.head_w1 = put(p.head_w1);
  ids.head_b1 = put(p.head_b1);
  ids.head_w2 = put(p.head_w2);
  ids.head_b2 = put(p.head_b2);
  return ids;
}

Tape::Id layer_on_tape(Tape& t, const graph::SurfaceGraph& g, Tape::Id x, const LayerIds& l,
                       const ModelConfig& c) {
  const Tape::Id self = t.matmul(x, l.w_self);
  const Tape::Id nbr = t.matmul(t.neighbor_mean(g, x), l.w_nbr);
  Tape::Id pre = t.add_row(t.add(self, nbr), l.bias);
  if (c.layer_norm) pre = t.layer_norm(pre, l.ln_gain, l.ln_shift);
  return t.add(t.activate(pre, c.activation), x);
}

Tape::Id encode_on_tape(Tape& t, const graph::SurfaceGraph& g, Tape::Id x, const ParamIds& ids,
                        const ModelConfig& c) {
  const Tape::Id x0 = t.matmul(x, ids.w_in);
  Tape::Id h = x0;
  for (const auto& l : ids.layers) h = layer_on_tape(t, g, h, l, c);
  return t.add(h, x0);
}

Tape::Id symmetrize_on_tape(Tape& t, const graph::SurfaceGraph& g, const graph::FeatureTable& x,
                            const ParamIds& ids, const ModelConfig& c) {
  g_symmetrize_calls.fetch_add(1, std::memory_order_relaxed);
  const Tape::Id a = encode_on_tape(t, g, t.constant(x), ids, c);
  const Tape::Id b = encode_on_tape(t, g, t.constant(graph::reflect_features(x)), ids, c);
  return t.scale(t.add(a, b), 0.5);
}

Tape::Id embed_on_tape(Tape& t, const graph::SurfaceGraph& g, const graph::FeatureTable& x,
                       const ParamIds& ids, const ModelConfig& c) {
  if (c.mode == Mode::kEquivariant) return symmetrize_on_tape(t, g, x, ids, c);
  return encode_on_tape(t, g, t.constant(x), ids, c);
}

Tape::Id head_on_tape(Tape& t, Tape::Id z, const ParamIds& ids, const ModelConfig& c) {
  const Tape::Id h = t.activate(t.add_row(t.matmul(z, ids.head_w1), ids.head_b1), c.activation);
  return t.add_row(t.matmul(h, ids.head_w2), ids.head_b2);
}

void check_inputs(const graph::SurfaceGraph& g, const graph::FeatureTable& x, const ModelParams& p,
                  const ModelConfig& c) {
  validate(c);
  if (x.cols() != graph::kFeatureCount) throw ShapeError("features must have 6 columns");
  if (static_cast<std::size_t>(x.rows()) != g.node_count()) {
    throw ShapeError("feature rows (" + std::to_string(x.rows()) + ") differ from graph nodes (" +
                     std::to_string(g.node_count()) + ")");
  }
  check_shapes(p, c);
}

Matrix uniform(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double fan_in) {
  const double bound = 1.0 / std::sqrt(fan_in);
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index col = 0; col < cols; ++col) m(r, col) = dist(rng);
  return m;
}

}  // namespace

std::string to_string(Mode m) { return m == Mode::kBaseline ? "baseline" : "equivariant"; }
std::string to_string(Target t) { return t == Target::kCpMean ? "cp_mean" : "cp_std"; }
std::string to_string(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
    case Activation::kIdentity: return "identity";
  }
  return "relu";
}

Mode parse_mode(const std::string& s) {
  if (s == "baseline") return Mode::kBaseline;
  if (s == "equivariant") return Mode::kEquivariant;
  throw ConfigError("unknown mode '" + s + "' (baseline|equivariant)");
}

Target parse_target(const std::string& s) {
  if (s == "cp_mean") return Target::kCpMean;
  if (s == "cp_std") return Target::kCpStd;
  throw ConfigError("unknown target '" + s + "' (cp_mean|cp_std)");
}

Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "tanh") return Activation::kTanh;
  if (s == "identity") return Activation::kIdentity;
  throw ConfigError("unknown activation '" + s + "' (relu|tanh|identity)");
}

void validate(const ModelConfig& c) {
  if (c.hidden_dim < 1) throw ConfigError("hidden_dim must be >= 1");
  if (c.num_layers < 1) throw ConfigError("num_layers must be >= 1");
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"hidden_dim", c.hidden_dim},
          {"num_layers", c.num_layers},
          {"activation", to_string(c.activation)},
          {"mode", to_string(c.mode)},
          {"target", to_string(c.target)},
          {"seed", c.seed},
          {"layer_norm", c.layer_norm}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.hidden_dim = j.at("hidden_dim").get<int>();
    c.num_layers = j.at("num_layers").get<int>();
    c.activation = parse_activation(j.at("activation").get<std::string>());
    c.mode = parse_mode(j.at("mode").get<std::string>());
    c.target = parse_target(j.at("target").get<std::string>());
    c.seed = j.at("seed").get<std::uint64_t>();
    c.layer_norm = j.value("layer_norm", true);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  validate(c);
  return c;
}

std::vector<Matrix*> ModelParams::tensors() {
  std::vector<Matrix*> out{&w_in};
  for (auto& l : layers) {
    out.insert(out.end(), {&l.w_self, &l.w_nbr, &l.bias, &l.ln_gain, &l.ln_shift});
  }
  out.insert(out.end(), {&head_w1, &head_b1, &head_w2, &head_b2});
  return out;
}

std::vector<const Matrix*> ModelParams::tensors() const {
  auto mut = const_cast<ModelParams*>(this)->tensors();
  return {mut.begin(), mut.end()};
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const Matrix* m : tensors()) n += static_cast<std::size_t>(m->size());
  return n;
}

bool ModelParams::all_finite() const {
  for (const Matrix* m : tensors())
    if (!m->allFinite()) return false;
  return true;
}

ModelParams init_params(const ModelConfig& c) {
  validate(c);
  const int h = c.hidden_dim;
  std::mt19937_64 rng(c.seed);
  ModelParams p;
  p.w_in = uniform(rng, graph::kFeatureCount, h, graph::kFeatureCount);
  for (int i = 0; i < c.num_layers; ++i) {
    LayerParams l;
    l.w_self = uniform(rng, h, h, h);
    l.w_nbr = uniform(rng, h, h, h);
    l.bias = Matrix::Zero(1, h);
    l.ln_gain = Matrix::Ones(1, h);
    l.ln_shift = Matrix::Zero(1, h);
    p.layers.push_back(std::move(l));
  }
  p.head_w1 = uniform(rng, h, h, h);
  p.head_b1 = Matrix::Zero(1, h);
  p.head_w2 = uniform(rng, h, 1, h);
  p.head_b2 = Matrix::Zero(1, 1);
  return p;
}

ModelParams zeros_like(const ModelParams& p) {
  ModelParams z = p;
  for (Matrix* m : z.tensors()) m->setZero();
  return z;
}

void check_shapes(const ModelParams& p, const ModelConfig& c) {
  const Eigen::Index h = c.hidden_dim;
  auto expect = [](const Matrix& m, Eigen::Index r, Eigen::Index col, const char* name) {
    if (m.rows() != r || m.cols() != col) {
      throw ConfigMismatchError(std::string(name) + " is " + std::to_string(m.rows()) + "x" +
                                std::to_string(m.cols()) + ", config implies " + std::to_string(r) +
                                "x" + std::to_string(col));
    }
  };
  expect(p.w_in, graph::kFeatureCount, h, "w_in");
  if (p.layers.size() != static_cast<std::size_t>(c.num_layers)) {
    throw ConfigMismatchError("params have " + std::to_string(p.layers.size()) + " layers, config " +
                              std::to_string(c.num_layers));
  }
  for (const auto& l : p.layers) {
    expect(l.w_self, h, h, "w_self");
    expect(l.w_nbr, h, h, "w_nbr");
    expect(l.bias, 1, h, "bias");
    expect(l.ln_gain, 1, h, "ln_gain");
    expect(l.ln_shift, 1, h, "ln_shift");
  }
  expect(p.head_w1, h, h, "head_w1");
  expect(p.head_b1, 1, h, "head_b1");
  expect(p.head_w2, h, 1, "head_w2");
  expect(p.head_b2, 1, 1, "head_b2");
}

Embedding sage_layer(const Embedding& x, const graph::SurfaceGraph& g, const LayerParams& layer,
                     const ModelConfig& c) {
  if (static_cast<std::size_t>(x.rows()) != g.node_count()) {
    throw ShapeError("sage_layer: embedding rows differ from graph nodes");
  }
  Tape t;
  const LayerIds ids{t.constant(layer.w_self), t.constant(layer.w_nbr), t.constant(layer.bias),
                     t.constant(layer.ln_gain), t.constant(layer.ln_shift)};
  return t.value(layer_on_tape(t, g, t.constant(x), ids, c));
}

Embedding encode(const graph::SurfaceGraph& g, const graph::FeatureTable& x, const ModelParams& p,
                 const ModelConfig& c) {
  check_inputs(g, x, p, c);
  Tape t;
  const ParamIds ids = put_params(t, p, false);
  return t.value(encode_on_tape(t, g, t.constant(x), ids, c));
}

Embedding symmetrize_encode(const graph::SurfaceGraph& g, const graph::FeatureTable& x,
                            const ModelParams& p, const ModelConfig& c) {
  check_inputs(g, x, p, c);
  Tape t;
  const ParamIds ids = put_params(t, p, false);
  return t.value(symmetrize_on_tape(t, g, x, ids, c));
}

Eigen::VectorXd forward(const graph::SurfaceGraph& g, const graph::FeatureTable& x,
                        const ModelParams& p, const ModelConfig& c) {
  check_inputs(g, x, p, c);
  Tape t;
  const ParamIds ids = put_params(t, p, false);
  return t.value(head_on_tape(t, embed_on_tape(t, g, x, ids, c), ids, c)).col(0);
}

LossAndGrads loss_and_gradients(const graph::SurfaceGraph& g, const graph::FeatureTable& x,
                                const Eigen::VectorXd& targets, const ModelParams& p,
                                const ModelConfig& c) {
  check_inputs(g, x, p, c);
  if (static_cast<std::size_t>(targets.size()) != g.node_count()) {
    throw ShapeError("target length differs from node count");
  }
  Tape t;
  const ParamIds ids = put_params(t, p, true);
  const Tape::Id pred = head_on_tape(t, embed_on_tape(t, g, x, ids, c), ids, c);
  const Tape::Id loss = t.mse(pred, targets);
  LossAndGrads out;
  out.loss = t.value(loss)(0, 0);
  if (!std::isfinite(out.loss)) throw TrainingError("loss is not finite", -1);
  t.backward(loss);

  out.grads = zeros_like(p);
  auto take = [&](Tape::Id id, Matrix& dst) {
    if (t.grad(id).size() != 0) dst = t.grad(id);
  };
  take(ids.w_in, out.grads.w_in);
  for (std::size_t i = 0; i < ids.layers.size(); ++i) {
    const LayerIds& l = ids.layers[i];
    LayerParams& gl = out.grads.layers[i];
    take(l.w_self, gl.w_self);
    take(l.w_nbr, gl.w_nbr);
    take(l.bias, gl.bias);
    take(l.ln_gain, gl.ln_gain);
    take(l.ln_shift, gl.ln_shift);
  }
  take(ids.head_w1, out.grads.head_w1);
  take(ids.head_b1, out.grads.head_b1);
  take(ids.head_w2, out.grads.head_w2);
  take(ids.head_b2, out.grads.head_b2);
  return out;
}

std::uint64_t symmetrize_call_count() { return g_symmetrize_calls.load(std::memory_order_relaxed); }

}  // namespace windmil::model
