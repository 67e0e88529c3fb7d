#include "windmil/model/tape.hpp"

#include <cmath>

#include "windmil/error.hpp"

namespace windmil::model {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
  }
}

}  // namespace

Matrix neighbor_mean(const graph::SurfaceGraph& g, const Matrix& x) {
  if (static_cast<std::size_t>(x.rows()) != g.node_count()) {
    throw ShapeError("neighbor_mean: row count does not match graph");
  }
  Matrix out = Matrix::Zero(x.rows(), x.cols());
  for (std::size_t v = 0; v < g.node_count(); ++v) {
    const auto nb = g.neighbors_of(v);
    if (nb.empty()) continue;
    auto row = out.row(static_cast<Eigen::Index>(v));
    for (std::uint32_t u : nb) row += x.row(u);
    row /= static_cast<double>(nb.size());
  }
  return out;
}

Matrix layer_norm(const Matrix& x, const RowVector& gain, const RowVector& shift) {
  Matrix out(x.rows(), x.cols());
  const double n = static_cast<double>(x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).sum() / n;
    const RowVector centered = x.row(r).array() - mean;
    const double inv = 1.0 / std::sqrt(centered.squaredNorm() / n + Tape::kLayerNormEps);
    out.row(r) = (centered * inv).cwiseProduct(gain) + shift;
  }
  return out;
}

Matrix activate(const Matrix& x, Activation act) {
  switch (act) {
    case Activation::kRelu: return x.cwiseMax(0.0);
    case Activation::kTanh: return x.array().tanh().matrix();
    case Activation::kIdentity: return x;
  }
  return x;
}

Tape::Id Tape::push(Matrix value, bool needs_grad) {
  nodes_.push_back({std::move(value), Matrix(), needs_grad, {}});
  return static_cast<Id>(nodes_.size() - 1);
}

Tape::Id Tape::constant(Matrix value) { return push(std::move(value), false); }
Tape::Id Tape::variable(Matrix value) { return push(std::move(value), true); }

Matrix& Tape::grad_ref(Id id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Tape::Id Tape::matmul(Id a, Id b) {
  if (value(a).cols() != value(b).rows()) throw ShapeError("matmul: inner dimensions differ");
  const Id out = push(value(a) * value(b), needs(a) || needs(b));
  if (needs(out)) {
    nodes_[out].back = [this, a, b, out] {
      const Matrix& g = nodes_[out].grad;
      if (needs(a)) grad_ref(a).noalias() += g * value(b).transpose();
      if (needs(b)) grad_ref(b).noalias() += value(a).transpose() * g;
    };
  }
  return out;
}

Tape::Id Tape::add(Id a, Id b) {
  require_same_shape(value(a), value(b), "add");
  const Id out = push(value(a) + value(b), needs(a) || needs(b));
  if (needs(out)) {
    nodes_[out].back = [this, a, b, out] {
      if (needs(a)) grad_ref(a) += nodes_[out].grad;
      if (needs(b)) grad_ref(b) += nodes_[out].grad;
    };
  }
  return out;
}

Tape::Id Tape::add_row(Id a, Id row) {
  if (value(row).rows() != 1 || value(row).cols() != value(a).cols()) {
    throw ShapeError("add_row: bias must be 1 x cols");
  }
  Matrix v = value(a);
  v.rowwise() += value(row).row(0);
  const Id out = push(std::move(v), needs(a) || needs(row));
  if (needs(out)) {
    nodes_[out].back = [this, a, row, out] {
      if (needs(a)) grad_ref(a) += nodes_[out].grad;
      if (needs(row)) grad_ref(row) += nodes_[out].grad.colwise().sum();
    };
  }
  return out;
}

Tape::Id Tape::scale(Id a, double s) {
  const Id out = push(value(a) * s, needs(a));
  if (needs(out)) {
    nodes_[out].back = [this, a, s, out] { grad_ref(a) += nodes_[out].grad * s; };
  }
  return out;
}

Tape::Id Tape::neighbor_mean(const graph::SurfaceGraph& g, Id a) {
  const Id out = push(model::neighbor_mean(g, value(a)), needs(a));
  if (needs(out)) {
    nodes_[out].back = [this, &g, a, out] {
      const Matrix& go = nodes_[out].grad;
      Matrix& ga = grad_ref(a);
      for (std::size_t v = 0; v < g.node_count(); ++v) {
        const auto nb = g.neighbors_of(v);
        if (nb.empty()) continue;
        const RowVector share = go.row(static_cast<Eigen::Index>(v)) / static_cast<double>(nb.size());
        for (std::uint32_t u : nb) ga.row(u) += share;
      }
    };
  }
  return out;
}

Tape::Id Tape::layer_norm(Id a, Id gain, Id shift) {
  const Matrix& x = value(a);
  if (value(gain).rows() != 1 || value(gain).cols() != x.cols() || value(shift).rows() != 1 ||
      value(shift).cols() != x.cols()) {
    throw ShapeError("layer_norm: gain/shift must be 1 x cols");
  }
  const Id out = push(model::layer_norm(x, value(gain).row(0), value(shift).row(0)),
                      needs(a) || needs(gain) || needs(shift));
  if (needs(out)) {
    nodes_[out].back = [this, a, gain, shift, out] {
      const Matrix& x = value(a);
      const Matrix& go = nodes_[out].grad;
      const RowVector gvec = value(gain).row(0);
      const double n = static_cast<double>(x.cols());
      RowVector dgain = RowVector::Zero(x.cols());
      for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const double mean = x.row(r).sum() / n;
        const RowVector centered = x.row(r).array() - mean;
        const double inv = 1.0 / std::sqrt(centered.squaredNorm() / n + kLayerNormEps);
        const RowVector xhat = centered * inv;
        dgain += go.row(r).cwiseProduct(xhat);
        if (needs(a)) {
          const RowVector dxhat = go.row(r).cwiseProduct(gvec);
          const double m1 = dxhat.sum() / n;
          const double m2 = dxhat.dot(xhat) / n;
          grad_ref(a).row(r) += inv * (dxhat.array() - m1 - xhat.array() * m2).matrix();
        }
      }
      if (needs(gain)) grad_ref(gain).row(0) += dgain;
      if (needs(shift)) grad_ref(shift) += go.colwise().sum();
    };
  }
  return out;
}

Tape::Id Tape::activate(Id a, Activation act) {
  const Id out = push(model::activate(value(a), act), needs(a));
  if (needs(out)) {
    nodes_[out].back = [this, a, act, out] {
      const Matrix& go = nodes_[out].grad;
      switch (act) {
        case Activation::kRelu:
          grad_ref(a).array() += (value(a).array() > 0.0).select(go.array(), 0.0);
          break;
        case Activation::kTanh:
          grad_ref(a).array() += go.array() * (1.0 - value(out).array().square());
          break;
        case Activation::kIdentity:
          grad_ref(a) += go;
          break;
      }
    };
  }
  return out;
}

Tape::Id Tape::mse(Id pred, const Eigen::VectorXd& target) {
  const Matrix& p = value(pred);
  if (p.cols() != 1 || p.rows() != target.size()) throw ShapeError("mse: prediction/target length mismatch");
  if (p.rows() == 0) throw ShapeError("mse: empty prediction");
  const double n = static_cast<double>(p.rows());
  Matrix loss(1, 1);
  loss(0, 0) = (p.col(0) - target).squaredNorm() / n;
  const Id out = push(std::move(loss), needs(pred));
  if (needs(out)) {
    nodes_[out].back = [this, pred, target, n, out] {
      grad_ref(pred).col(0) += (2.0 * nodes_[out].grad(0, 0) / n) * (value(pred).col(0) - target);
    };
  }
  return out;
}

void Tape::backward(Id out) {
  if (value(out).size() != 1) throw ShapeError("backward: output must be scalar");
  grad_ref(out)(0, 0) = 1.0;
  for (Id i = out; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.back && n.grad.size() != 0) n.back();
  }
}

}  // namespace windmil::model
