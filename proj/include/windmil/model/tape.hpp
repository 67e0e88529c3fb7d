#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

#include "windmil/graph/surface_graph.hpp"

namespace windmil::model {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::RowVectorXd;

enum class Activation { kRelu, kTanh, kIdentity };

/// Reverse-mode autodiff over dense matrices. Every op records its output and
/// a closure that pushes the output gradient into its inputs; backward() runs
/// the closures in reverse creation order.
class Tape {
 public:
  using Id = int;

  Id constant(Matrix value);
  Id variable(Matrix value);

  const Matrix& value(Id id) const { return nodes_[id].value; }
  const Matrix& grad(Id id) const { return nodes_[id].grad; }
  std::size_t size() const { return nodes_.size(); }

  Id matmul(Id a, Id b);
  Id add(Id a, Id b);
  Id add_row(Id a, Id row);  // broadcast a 1 x cols row over every row of a
  Id scale(Id a, double s);
  Id neighbor_mean(const graph::SurfaceGraph& g, Id a);
  Id layer_norm(Id a, Id gain, Id shift);
  Id activate(Id a, Activation act);
  Id mse(Id pred, const Eigen::VectorXd& target);  // 1 x 1

  /// Seeds d(out)/d(out) = 1 for a 1 x 1 node and propagates.
  void backward(Id out);

  static constexpr double kLayerNormEps = 1e-5;

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    std::function<void()> back;
  };

  Id push(Matrix value, bool needs_grad);
  bool needs(Id id) const { return nodes_[id].needs_grad; }
  Matrix& grad_ref(Id id);

  std::vector<Node> nodes_;
};

/// Value-only helpers with the same arithmetic as the tape ops.
Matrix neighbor_mean(const graph::SurfaceGraph& g, const Matrix& x);
Matrix layer_norm(const Matrix& x, const RowVector& gain, const RowVector& shift);
Matrix activate(const Matrix& x, Activation act);

}  // namespace windmil::model
