#include "windmil/model/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace windmil::model {

std::vector<std::string> tensor_names(const ModelConfig& c) {
  std::vector<std::string> names{"w_in"};
  for (int i = 0; i < c.num_layers; ++i) {
    for (const char* n : {"w_self", "w_nbr", "bias", "ln_gain", "ln_shift"}) {
      names.push_back("layer" + std::to_string(i) + "." + n);
    }
  }
  names.insert(names.end(), {"head_w1", "head_b1", "head_w2", "head_b2"});
  return names;
}

std::vector<TensorCheck> gradient_check(const graph::SurfaceGraph& g, const Eigen::VectorXd& targets,
                                        const ModelParams& p, const ModelConfig& c, double step) {
  const LossAndGrads analytic = loss_and_gradients(g, g.features, targets, p, c);
  auto loss_at = [&](const ModelParams& q) {
    const Eigen::VectorXd pred = forward(g, g.features, q, c);
    return (pred - targets).squaredNorm() / static_cast<double>(pred.size());
  };
  const auto names = tensor_names(c);
  ModelParams probe = p;
  auto probe_tensors = probe.tensors();
  const auto grad_tensors = analytic.grads.tensors();
  std::vector<TensorCheck> out;
  for (std::size_t t = 0; t < probe_tensors.size(); ++t) {
    Matrix& m = *probe_tensors[t];
    const Matrix& ga = *grad_tensors[t];
    double diff = 0.0, scale = 0.0;
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double orig = m(i);
      m(i) = orig + step;
      const double up = loss_at(probe);
      m(i) = orig - step;
      const double down = loss_at(probe);
      m(i) = orig;
      const double numeric = (up - down) / (2.0 * step);
      diff = std::max(diff, std::abs(ga(i) - numeric));
      scale = std::max({scale, std::abs(ga(i)), std::abs(numeric)});
    }
    out.push_back({names[t], diff, scale > 0.0 ? diff / scale : 0.0});
  }
  return out;
}

}  // namespace windmil::model
