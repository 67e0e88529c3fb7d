#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

#include "windmil/error.hpp"
#include "windmil/model/gradcheck.hpp"
#include "windmil/model/train.hpp"

namespace gr = windmil::graph;
namespace md = windmil::model;
using windmil::geometry::Vec3;

namespace {

gr::SurfaceGraph random_graph(int n, int k, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec3> pts(n), nrm(n);
  for (int i = 0; i < n; ++i) {
    pts[i] = {u(rng) * 10, (u(rng) + 1) * 5, u(rng) * 10};
    nrm[i] = Vec3(u(rng), u(rng), u(rng)).normalized();
  }
  return gr::build_graph(pts, nrm, 10.0, k, "g" + std::to_string(seed));
}

md::ModelConfig small_config(md::Mode mode, int hidden = 8, int layers = 2, std::uint64_t seed = 1) {
  md::ModelConfig c;
  c.hidden_dim = hidden;
  c.num_layers = layers;
  c.mode = mode;
  c.seed = seed;
  return c;
}

// Randomizes biases and layer-norm affine terms too, so no tensor sits at
// its special init value.
md::ModelParams random_params(const md::ModelConfig& c, unsigned seed) {
  md::ModelParams p = md::init_params(c);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (md::Matrix* m : p.tensors())
    for (Eigen::Index i = 0; i < m->size(); ++i) (*m)(i) += u(rng);
  return p;
}

Eigen::VectorXd random_targets(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd t(static_cast<Eigen::Index>(n));
  for (auto& v : t) v = u(rng);
  return t;
}

gr::SurfaceGraph isolated_graph(const gr::FeatureTable& x) {
  gr::SurfaceGraph g;
  g.features = x;
  g.offsets.assign(static_cast<std::size_t>(x.rows()) + 1, 0u);
  return g;
}

}  // namespace

TEST(Params, CountMatchesShapeDefinitions) {
  md::ModelConfig c = small_config(md::Mode::kBaseline, 4, 1);
  EXPECT_EQ(md::init_params(c).parameter_count(),
            static_cast<std::size_t>(6 * 4 + (4 * 4 * 2 + 4 + 4 + 4) + (4 * 4 + 4) + (4 * 1 + 1)));
  EXPECT_EQ(md::init_params(c).parameter_count(), 93u);
}

TEST(Params, SeededInitIsDeterministic) {
  const auto c = small_config(md::Mode::kBaseline, 16, 3, 42);
  EXPECT_EQ(md::init_params(c), md::init_params(c));
  auto c2 = c;
  c2.seed = 43;
  EXPECT_NE(md::init_params(c), md::init_params(c2));
  const auto p = md::init_params(c);
  EXPECT_TRUE(p.layers[0].ln_gain.isOnes());
  EXPECT_TRUE(p.layers[0].bias.isZero());
  EXPECT_LE(p.layers[0].w_self.cwiseAbs().maxCoeff(), 1.0 / std::sqrt(16.0));
  EXPECT_LE(p.w_in.cwiseAbs().maxCoeff(), 1.0 / std::sqrt(6.0));
}

TEST(Params, ConfigValidation) {
  md::ModelConfig c;
  c.hidden_dim = 0;
  EXPECT_THROW(md::init_params(c), windmil::ConfigError);
  c.hidden_dim = 4;
  c.num_layers = 0;
  EXPECT_THROW(md::init_params(c), windmil::ConfigError);
}

TEST(SageLayer, IsolatedNodeDoublesInput) {
  md::ModelConfig c = small_config(md::Mode::kBaseline, 3, 1);
  c.layer_norm = false;
  c.activation = md::Activation::kIdentity;
  md::Matrix x(1, 3);
  x << 0.5, -1.0, 2.0;
  gr::FeatureTable f = gr::FeatureTable::Zero(1, 6);
  const auto g = isolated_graph(f);
  md::LayerParams l;
  l.w_self = md::Matrix::Identity(3, 3);
  l.w_nbr = md::Matrix::Constant(3, 3, 7.0);
  l.bias = md::Matrix::Zero(1, 3);
  l.ln_gain = md::Matrix::Ones(1, 3);
  l.ln_shift = md::Matrix::Zero(1, 3);
  EXPECT_EQ(md::sage_layer(x, g, l, c), 2.0 * x);
}

TEST(SageLayer, AdjacentEqualNodesStayEqual) {
  const auto c = small_config(md::Mode::kBaseline, 5, 1);
  const std::vector<Vec3> pts = {{0, 0, 0}, {1, 0, 0}};
  const std::vector<Vec3> nrm(2, Vec3(0, 1, 0));
  const auto g = gr::build_graph(pts, nrm, 1.0, 1);
  md::Matrix x(2, 5);
  x.row(0) << 0.1, 0.2, -0.3, 0.4, 0.5;
  x.row(1) = x.row(0);
  const auto p = random_params(c, 3);
  const auto out = md::sage_layer(x, g, p.layers[0], c);
  EXPECT_EQ(out.row(0), out.row(1));
}

TEST(SageLayer, RejectsShapeMismatch) {
  const auto c = small_config(md::Mode::kBaseline, 4, 1);
  const auto g = random_graph(10, 3, 1);
  const auto p = md::init_params(c);
  EXPECT_THROW(md::sage_layer(md::Matrix::Zero(9, 4), g, p.layers[0], c), windmil::ShapeError);
  EXPECT_THROW(md::forward(g, gr::FeatureTable::Zero(10, 5), p, c), windmil::ShapeError);
}

TEST(Encode, ZeroLayerWeightsGiveTwiceProjection) {
  md::ModelConfig c = small_config(md::Mode::kBaseline, 6, 3);
  c.layer_norm = false;
  const auto g = random_graph(20, 4, 2);
  auto p = random_params(c, 4);
  for (auto& l : p.layers) {
    l.w_self.setZero();
    l.w_nbr.setZero();
    l.bias.setZero();
  }
  const md::Matrix x0 = g.features * p.w_in;
  EXPECT_EQ(md::encode(g, g.features, p, c), 2.0 * x0);
  const auto a = md::encode(g, g.features, p, c);
  EXPECT_EQ(a, md::encode(g, g.features, p, c));
}

TEST(Encode, NodePermutationEquivariance) {
  // Neighbour sums run in ascending index order, so relabelling can reorder
  // the additions; agreement is to rounding, not bitwise.
  const auto c = small_config(md::Mode::kEquivariant, 8, 2);
  const auto g = random_graph(60, 5, 8);
  const auto p = random_params(c, 9);
  std::vector<std::uint32_t> perm(g.node_count());
  std::iota(perm.begin(), perm.end(), 0u);
  std::shuffle(perm.begin(), perm.end(), std::mt19937(1));
  std::vector<Vec3> pos(g.node_count()), nrm(g.node_count());
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    const auto r = g.features.row(static_cast<Eigen::Index>(i));
    pos[perm[i]] = Vec3(r(0), r(1), r(2)) * 10.0;
    nrm[perm[i]] = Vec3(r(3), r(4), r(5));
  }
  const auto gp = gr::build_graph(pos, nrm, 10.0, 5);
  const auto a = md::forward(g, g.features, p, c);
  const auto b = md::forward(gp, gp.features, p, c);
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    EXPECT_NEAR(a(static_cast<Eigen::Index>(i)), b(perm[i]), 1e-12);
  }
}

TEST(Symmetrize, PlanarInputIsFixedPoint) {
  const auto c = small_config(md::Mode::kEquivariant, 8, 2);
  auto g = random_graph(30, 4, 5);
  g.features.col(gr::kColZ).setZero();
  for (Eigen::Index r = 0; r < g.features.rows(); ++r) {
    g.features(r, gr::kColNz) = 0.0;
    g.features.row(r).tail<3>().normalize();
  }
  const auto p = random_params(c, 6);
  EXPECT_EQ(md::symmetrize_encode(g, g.features, p, c), md::encode(g, g.features, p, c));
}

TEST(Symmetrize, ReflectedInputGivesBitwiseEqualEmbedding) {
  const auto c = small_config(md::Mode::kEquivariant, 8, 2);
  const auto g = random_graph(40, 5, 6);
  const auto p = random_params(c, 7);
  const auto a = md::symmetrize_encode(g, g.features, p, c);
  const auto b = md::symmetrize_encode(g, gr::reflect_features(g.features), p, c);
  EXPECT_EQ(a, b);
}

TEST(Forward, EquivariantModeIsReflectionInvariant) {
  double worst = 0.0;
  for (unsigned draw = 0; draw < 100; ++draw) {
    const auto c = small_config(md::Mode::kEquivariant, 8, 2, draw);
    const auto g = random_graph(25, 4, 100 + draw);
    const auto p = random_params(c, 200 + draw);
    const auto a = md::forward(g, g.features, p, c);
    const auto b = md::forward(g, gr::reflect_features(g.features), p, c);
    worst = std::max(worst, (a - b).cwiseAbs().maxCoeff());
  }
  EXPECT_LE(worst, 1e-9);
}

TEST(Forward, BaselineModeIsNotReflectionInvariant) {
  for (unsigned draw = 0; draw < 10; ++draw) {
    const auto c = small_config(md::Mode::kBaseline, 8, 2, draw);
    const auto g = random_graph(25, 4, 300 + draw);
    const auto p = random_params(c, 400 + draw);
    const auto a = md::forward(g, g.features, p, c);
    const auto b = md::forward(g, gr::reflect_features(g.features), p, c);
    EXPECT_GT((a - b).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(Forward, ZeroHeadWeightsGiveFinalBias) {
  const auto c = small_config(md::Mode::kBaseline, 8, 2);
  const auto g = random_graph(15, 3, 1);
  auto p = random_params(c, 2);
  p.head_w2.setZero();
  p.head_b2(0, 0) = 0.375;
  const auto y = md::forward(g, g.features, p, c);
  for (double v : y) EXPECT_EQ(v, 0.375);
}

TEST(Loss, PerfectPredictionHasZeroLossAndGradients) {
  for (auto mode : {md::Mode::kBaseline, md::Mode::kEquivariant}) {
    const auto c = small_config(mode);
    const auto g = random_graph(12, 3, 3);
    const auto p = random_params(c, 4);
    const Eigen::VectorXd t = md::forward(g, g.features, p, c);
    const auto lg = md::loss_and_gradients(g, g.features, t, p, c);
    EXPECT_EQ(lg.loss, 0.0);
    for (const md::Matrix* m : lg.grads.tensors()) EXPECT_TRUE(m->isZero(0.0));
  }
}

TEST(Loss, GradientsMatchCentralDifferences) {
  for (auto mode : {md::Mode::kBaseline, md::Mode::kEquivariant}) {
    const auto c = small_config(mode, 8, 2, 11);
    const auto g = random_graph(10, 3, 12);
    const auto p = random_params(c, 13);
    const auto t = random_targets(10, 14);
    for (const auto& check : md::gradient_check(g, t, p, c)) {
      EXPECT_LT(check.rel_error, 1e-4) << md::to_string(mode) << " " << check.name;
    }
  }
}

TEST(Loss, TanhActivationGradients) {
  auto c = small_config(md::Mode::kEquivariant, 5, 1, 2);
  c.activation = md::Activation::kTanh;
  const auto g = random_graph(10, 3, 15);
  for (const auto& check : md::gradient_check(g, random_targets(10, 16), random_params(c, 17), c)) {
    EXPECT_LT(check.rel_error, 1e-4) << check.name;
  }
}

TEST(Loss, FinalBiasGradientIsLinearInTargetOffset) {
  const auto c = small_config(md::Mode::kBaseline);
  const auto g = random_graph(12, 3, 21);
  const auto p = random_params(c, 22);
  const Eigen::VectorXd pred = md::forward(g, g.features, p, c);
  const Eigen::VectorXd offset = random_targets(12, 23);
  const auto one = md::loss_and_gradients(g, g.features, pred + offset, p, c);
  const auto two = md::loss_and_gradients(g, g.features, pred + 2.0 * offset, p, c);
  EXPECT_NEAR(two.grads.head_b2(0, 0), 2.0 * one.grads.head_b2(0, 0), 1e-12);
}

TEST(Loss, NonFiniteLossThrows) {
  const auto c = small_config(md::Mode::kBaseline);
  const auto g = random_graph(12, 3, 21);
  Eigen::VectorXd t = Eigen::VectorXd::Zero(12);
  t(3) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(md::loss_and_gradients(g, g.features, t, md::init_params(c), c), windmil::TrainingError);
}

TEST(Adam, ZeroGradientLeavesParams) {
  const auto c = small_config(md::Mode::kBaseline);
  auto p = md::init_params(c);
  const auto before = p;
  auto state = md::make_adam_state(p);
  md::adam_step(p, md::zeros_like(p), state, {});
  EXPECT_EQ(p, before);
}

TEST(Adam, FirstStepIsBoundedByLearningRate) {
  const auto c = small_config(md::Mode::kBaseline);
  auto p = md::init_params(c);
  const auto before = p;
  auto grads = random_params(c, 5);
  auto state = md::make_adam_state(p);
  md::TrainConfig tc;
  md::adam_step(p, grads, state, tc);
  const auto a = p.tensors();
  const auto b = before.tensors();
  const auto g = grads.tensors();
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (Eigen::Index j = 0; j < a[i]->size(); ++j) {
      const double delta = (*a[i])(j) - (*b[i])(j);
      EXPECT_LE(std::abs(delta), tc.learning_rate * (1 + 1e-9));
      // m/sqrt(v) = sign(g) after bias correction on the first step.
      if (std::abs((*g[i])(j)) > 1e-3) EXPECT_NEAR(delta, -tc.learning_rate * std::copysign(1.0, (*g[i])(j)), 1e-8);
    }
  }
  auto p2 = before;
  auto s2 = md::make_adam_state(p2);
  md::adam_step(p2, grads, s2, tc);
  EXPECT_EQ(p2, p);
}

namespace {

struct TinySet {
  std::vector<gr::SurfaceGraph> graphs;
  std::vector<md::LabeledCase> train, dev;
};

TinySet tiny_set(int n_train, int n_dev) {
  TinySet s;
  for (int i = 0; i < n_train + n_dev; ++i) s.graphs.push_back(random_graph(30, 4, 500 + i));
  for (int i = 0; i < n_train + n_dev; ++i) {
    const auto& g = s.graphs[i];
    Eigen::VectorXd t = (g.features.col(1) - 0.3 * g.features.col(3) + 0.5 * g.features.col(2).array().tanh().matrix());
    (i < n_train ? s.train : s.dev).push_back({&g, t});
  }
  return s;
}

}  // namespace

TEST(Train, OverfitsOneGraph) {
  const auto s = tiny_set(1, 1);
  auto c = small_config(md::Mode::kBaseline, 16, 2, 3);
  md::TrainConfig tc;
  tc.max_epochs = 200;
  tc.patience = 200;
  tc.learning_rate = 1e-2;
  const auto initial = md::loss_and_gradients(*s.train[0].graph, s.train[0].graph->features,
                                              s.train[0].target, md::init_params(c), c).loss;
  const auto r = md::train(s.train, s.dev, c, tc);
  EXPECT_EQ(r.history.size(), 200u);
  EXPECT_LT(r.history.back().train_loss, 0.1 * initial);
}

TEST(Train, DeterministicHistoryAndPatienceZero) {
  const auto s = tiny_set(4, 2);
  const auto c = small_config(md::Mode::kEquivariant, 8, 1, 5);
  md::TrainConfig tc;
  tc.max_epochs = 6;
  tc.patience = 6;
  const auto a = md::train(s.train, s.dev, c, tc);
  const auto b = md::train(s.train, s.dev, c, tc);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].train_loss, b.history[i].train_loss);
    EXPECT_EQ(a.history[i].dev_rmse, b.history[i].dev_rmse);
  }
  EXPECT_EQ(a.params, b.params);

  tc.patience = 0;
  EXPECT_EQ(md::train(s.train, s.dev, c, tc).history.size(), 1u);
}

TEST(Train, BestDevParamsAreKept) {
  const auto s = tiny_set(3, 2);
  const auto c = small_config(md::Mode::kBaseline, 8, 1, 9);
  md::TrainConfig tc;
  tc.max_epochs = 15;
  tc.patience = 15;
  const auto r = md::train(s.train, s.dev, c, tc);
  double best = 1e300;
  for (const auto& h : r.history) best = std::min(best, h.dev_rmse);
  EXPECT_EQ(md::pooled_rmse(s.dev, r.params, c), best);
  EXPECT_EQ(r.history[r.best_epoch - 1].dev_rmse, best);
}

TEST(Train, ReflectOnlyThroughSymmetrize) {
  const auto s = tiny_set(3, 2);
  md::TrainConfig tc;
  tc.max_epochs = 3;
  tc.patience = 3;
  for (auto mode : {md::Mode::kBaseline, md::Mode::kEquivariant}) {
    const auto c = small_config(mode, 8, 1, 2);
    const auto r0 = gr::reflect_call_count();
    const auto s0 = md::symmetrize_call_count();
    md::train(s.train, s.dev, c, tc);
    const auto reflects = gr::reflect_call_count() - r0;
    const auto syms = md::symmetrize_call_count() - s0;
    EXPECT_EQ(reflects, syms);
    if (mode == md::Mode::kBaseline) EXPECT_EQ(reflects, 0u);
    else EXPECT_EQ(reflects, 3u * (3u + 2u));  // per epoch: 3 train steps + 2 dev forwards
  }
}

TEST(Train, RejectsBadConfigs) {
  const auto s = tiny_set(1, 1);
  const auto c = small_config(md::Mode::kBaseline);
  md::TrainConfig tc;
  tc.patience = tc.max_epochs + 1;
  EXPECT_THROW(md::train(s.train, s.dev, c, tc), windmil::ConfigError);
  tc = {};
  tc.learning_rate = 0.0;
  EXPECT_THROW(md::train(s.train, s.dev, c, tc), windmil::ConfigError);
  EXPECT_THROW(md::train({}, s.dev, c, md::TrainConfig{}), windmil::ConfigError);
}

TEST(Train, DivergenceReportsEpoch) {
  auto s = tiny_set(2, 1);
  s.train[1].target(0) = std::numeric_limits<double>::infinity();
  md::TrainConfig tc;
  tc.max_epochs = 3;
  tc.patience = 3;
  try {
    md::train(s.train, s.dev, small_config(md::Mode::kBaseline), tc);
    FAIL() << "expected TrainingError";
  } catch (const windmil::TrainingError& e) {
    EXPECT_EQ(e.epoch(), 1);
  }
}

TEST(Checkpoint, RoundTripAndErrors) {
  md::Checkpoint ck;
  ck.model = small_config(md::Mode::kEquivariant, 4, 2, 77);
  ck.model.target = md::Target::kCpStd;
  ck.train.max_epochs = 50;
  ck.params = random_params(ck.model, 8);
  const auto dir = std::filesystem::temp_directory_path() / "windmil_ckpt_test";
  std::filesystem::create_directories(dir);
  md::save_checkpoint(ck, dir / "model.bin");
  const auto back = md::load_checkpoint(dir / "model.bin");
  EXPECT_EQ(back.params, ck.params);
  EXPECT_EQ(back.model, ck.model);
  EXPECT_EQ(back.train, ck.train);

  auto bytes = md::serialize_checkpoint(ck);
  auto cut = bytes;
  cut.resize(cut.size() - 8);
  EXPECT_THROW(md::deserialize_checkpoint(cut), windmil::FormatError);

  auto bad_magic = bytes;
  bad_magic[1] = 'X';
  EXPECT_THROW(md::deserialize_checkpoint(bad_magic), windmil::FormatError);

  auto bad_version = bytes;
  bad_version[4] = 9;
  EXPECT_THROW(md::deserialize_checkpoint(bad_version), windmil::FormatError);

  // Declare hidden_dim 5 while the tensors are 4 wide.
  std::string text(bytes.begin(), bytes.end());
  const auto pos = text.find("\"hidden_dim\":4");
  ASSERT_NE(pos, std::string::npos);
  bytes[pos + 13] = '5';
  EXPECT_THROW(md::deserialize_checkpoint(bytes), windmil::ConfigMismatchError);
}
