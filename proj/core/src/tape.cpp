#include "soco_rcl/tape.hpp"

#include <cstring>

namespace soco::ml {

GradientTape::Inputs GradientTape::gather(const std::vector<Node>& inputs) const {
  Inputs out;
  out.reserve(inputs.size());
  for (Node n : inputs) {
    if (n < 0 || static_cast<std::size_t>(n) >= entries_.size()) throw DimensionError("tape: unknown node", n);
    out.push_back(&entries_[static_cast<std::size_t>(n)].value);
  }
  return out;
}

GradientTape::Node GradientTape::push(Entry e) {
  if (!e.leaf) e.value = e.forward(gather(e.inputs));
  entries_.push_back(std::move(e));
  return static_cast<Node>(entries_.size() - 1);
}

GradientTape::Node GradientTape::variable(Matrix value, std::string name) {
  Entry e;
  e.value = std::move(value);
  e.name = std::move(name);
  e.leaf = true;
  return push(std::move(e));
}

GradientTape::Node GradientTape::constant(Matrix value, std::string name) { return variable(std::move(value), std::move(name)); }

GradientTape::Node GradientTape::custom(std::vector<Node> inputs, ForwardFn forward, BackwardFn backward, std::string name) {
  Entry e;
  e.inputs = std::move(inputs);
  e.forward = std::move(forward);
  e.backward = std::move(backward);
  e.name = std::move(name);
  return push(std::move(e));
}

GradientTape::Node GradientTape::matmul(Node a, Node b) {
  if (value(a).cols() != value(b).rows()) throw DimensionError("tape matmul: inner dimensions differ", a);
  return custom(
      {a, b}, [](const Inputs& in) { return Matrix(*in[0] * *in[1]); },
      [](const Inputs& in, const Matrix&, const Matrix& go, std::vector<Matrix>& gi) {
        gi[0].noalias() += go * in[1]->transpose();
        gi[1].noalias() += in[0]->transpose() * go;
      },
      "matmul");
}

GradientTape::Node GradientTape::add(Node a, Node b) {
  if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) {
    throw DimensionError("tape add: shapes differ", a);
  }
  return custom(
      {a, b}, [](const Inputs& in) { return Matrix(*in[0] + *in[1]); },
      [](const Inputs&, const Matrix&, const Matrix& go, std::vector<Matrix>& gi) {
        gi[0] += go;
        gi[1] += go;
      },
      "add");
}

GradientTape::Node GradientTape::tanh(Node a) {
  return custom(
      {a}, [](const Inputs& in) { return Matrix(in[0]->array().tanh().matrix()); },
      [](const Inputs&, const Matrix& out, const Matrix& go, std::vector<Matrix>& gi) {
        gi[0].array() += go.array() * (1.0 - out.array().square());
      },
      "tanh");
}

GradientTape::Node GradientTape::concat(const std::vector<Node>& parts) {
  return custom(
      parts,
      [](const Inputs& in) {
        Eigen::Index rows = 0;
        for (const Matrix* m : in) rows += m->rows();
        Matrix out(rows, in.empty() ? 0 : in.front()->cols());
        Eigen::Index r = 0;
        for (const Matrix* m : in) {
          out.middleRows(r, m->rows()) = *m;
          r += m->rows();
        }
        return out;
      },
      [](const Inputs& in, const Matrix&, const Matrix& go, std::vector<Matrix>& gi) {
        Eigen::Index r = 0;
        for (std::size_t k = 0; k < in.size(); ++k) {
          gi[k] += go.middleRows(r, in[k]->rows());
          r += in[k]->rows();
        }
      },
      "concat");
}

GradientTape::Node GradientTape::clip(Node a, const Vector& lower, const Vector& upper) {
  return custom(
      {a}, [lower, upper](const Inputs& in) { return Matrix(in[0]->cwiseMax(lower).cwiseMin(upper)); },
      [lower, upper](const Inputs& in, const Matrix&, const Matrix& go, std::vector<Matrix>& gi) {
        const Matrix& x = *in[0];
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
          if (x(i, 0) > lower[i] && x(i, 0) < upper[i]) gi[0](i, 0) += go(i, 0);
        }
      },
      "clip");
}

GradientTape::Node GradientTape::sum(Node a) {
  return custom(
      {a}, [](const Inputs& in) { return Matrix::Constant(1, 1, in[0]->sum()); },
      [](const Inputs&, const Matrix&, const Matrix& go, std::vector<Matrix>& gi) { gi[0].array() += go(0, 0); },
      "sum");
}

void GradientTape::backward(Node root) {
  if (value(root).size() != 1) throw DimensionError("tape backward: root must be scalar", root);
  for (auto& e : entries_) e.grad = Matrix::Zero(e.value.rows(), e.value.cols());
  entries_[static_cast<std::size_t>(root)].grad(0, 0) = 1.0;
  for (auto k = static_cast<std::size_t>(root) + 1; k-- > 0;) {
    Entry& e = entries_[k];
    if (e.leaf || !e.grad.any()) continue;
    const Inputs in = gather(e.inputs);
    std::vector<Matrix> gi;
    gi.reserve(in.size());
    for (const Matrix* m : in) gi.push_back(Matrix::Zero(m->rows(), m->cols()));
    e.backward(in, e.value, e.grad, gi);
    for (std::size_t j = 0; j < e.inputs.size(); ++j) entries_[static_cast<std::size_t>(e.inputs[j])].grad += gi[j];
  }
}

bool GradientTape::replay() {
  bool same = true;
  for (auto& e : entries_) {
    if (e.leaf) continue;
    Matrix again = e.forward(gather(e.inputs));
    if (again.rows() != e.value.rows() || again.cols() != e.value.cols() ||
        std::memcmp(again.data(), e.value.data(), sizeof(double) * static_cast<std::size_t>(again.size())) != 0) {
      same = false;
    }
    e.value = std::move(again);
  }
  return same;
}

}  // namespace soco::ml
