#pragma once

#include "soco_rcl/types.hpp"

#include <functional>
#include <string>
#include <vector>

namespace soco::ml {

/// Reverse-mode tape over dense matrices.
///
/// Nodes are appended in evaluation order, so reverse insertion order is a
/// valid topological order for the backward pass.
class GradientTape {
 public:
  using Node = int;
  using Inputs = std::vector<const Matrix*>;
  using ForwardFn = std::function<Matrix(const Inputs&)>;
  /// Adds the contribution of `grad_out` to each `grad_in[k]` (pre-sized, zeroed).
  using BackwardFn =
      std::function<void(const Inputs& inputs, const Matrix& output, const Matrix& grad_out, std::vector<Matrix>& grad_in)>;

  Node variable(Matrix value, std::string name = "var");
  Node constant(Matrix value, std::string name = "const");

  Node matmul(Node a, Node b);
  Node add(Node a, Node b);
  Node tanh(Node a);
  /// Vertical concatenation of column blocks.
  Node concat(const std::vector<Node>& parts);
  /// Elementwise clamp; gradient passes only where the value was strictly inside.
  Node clip(Node a, const Vector& lower, const Vector& upper);
  Node sum(Node a);
  Node custom(std::vector<Node> inputs, ForwardFn forward, BackwardFn backward, std::string name);

  const Matrix& value(Node n) const { return entries_.at(static_cast<std::size_t>(n)).value; }
  const Matrix& grad(Node n) const { return entries_.at(static_cast<std::size_t>(n)).grad; }
  std::size_t size() const { return entries_.size(); }

  /// Seeds d root / d root = 1 (root must be 1 x 1) and accumulates gradients.
  void backward(Node root);
  /// Recomputes every non-leaf node from its recorded inputs; true when all
  /// outputs reproduce bit for bit.
  bool replay();

 private:
  struct Entry {
    std::vector<Node> inputs;
    ForwardFn forward;
    BackwardFn backward;
    Matrix value;
    Matrix grad;
    std::string name;
    bool leaf = false;
  };

  Inputs gather(const std::vector<Node>& inputs) const;
  Node push(Entry e);

  std::vector<Entry> entries_;
};

}  // namespace soco::ml
