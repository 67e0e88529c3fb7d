#pragma once

#include <string>
#include <vector>

#include "windmil/model/model.hpp"

namespace windmil::model {

struct TensorCheck {
  std::string name;
  double max_abs_diff = 0.0;
  double rel_error = 0.0;  // max |analytic - numeric| / max(|analytic|, |numeric|) over the tensor
};

/// Central differences of the MSE loss for every parameter entry, compared
/// with loss_and_gradients.
std::vector<TensorCheck> gradient_check(const graph::SurfaceGraph& g, const Eigen::VectorXd& targets,
                                        const ModelParams& p, const ModelConfig& c,
                                        double step = 1e-5);

std::vector<std::string> tensor_names(const ModelConfig& c);

}  // namespace windmil::model
