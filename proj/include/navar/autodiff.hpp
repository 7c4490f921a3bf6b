#pragma once

#include <cstddef>
#include <vector>

#include "navar/tensor.hpp"

namespace navar::numerics {

class Graph;

/// Handle to a value recorded on a Graph. Cheap to copy; only valid while the
/// owning graph is alive.
class Var {
 public:
  Var() = default;
  Var(Graph* graph, std::size_t index) : graph_(graph), index_(index) {}

  Graph* graph() const noexcept { return graph_; }
  std::size_t index() const noexcept { return index_; }
  const Tensor& value() const;

 private:
  Graph* graph_ = nullptr;
  std::size_t index_ = 0;
};

/// Define-by-run tape for reverse-mode differentiation. Build one per batch,
/// call backward() once on a scalar root, read gradients of the leaves.
class Graph {
 public:
  enum class Op {
    kInput,
    kParameter,
    kMatMul,
    kAdd,
    kSub,
    kMul,
    kAddRow,
    kAddScalar,
    kScale,
    kRelu,
    kTanh,
    kSigmoid,
    kAbs,
    kSquare,
    kSum,
  };

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Constant leaf; gradients are never accumulated into it.
  Var input(Tensor value);
  /// Differentiable leaf.
  Var parameter(Tensor value);

  const Tensor& value(Var v) const { return nodes_[v.index()].value; }
  /// Gradient of the last backward root w.r.t. `v`; zeros for values the root
  /// does not depend on.
  const Tensor& grad(Var v) const;

  /// Reverse sweep from a 1x1 root. A second call needs clear_gradients().
  void backward(Var root);
  void clear_gradients();

  std::size_t node_count() const noexcept { return nodes_.size(); }

  // Used by the free-function operators below.
  Var record(Op op, Tensor value, std::size_t lhs, std::size_t rhs, double scalar);

 private:
  struct Node {
    Op op;
    Tensor value;
    Tensor grad;
    std::size_t lhs;
    std::size_t rhs;
    double scalar;
    bool requires_grad;
  };

  void propagate(const Node& node);

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
/// Adds a 1xC row to every row of an RxC matrix.
Var add_row(Var matrix, Var row);
Var add(Var a, double s);
Var mul(Var a, double s);
Var relu(Var x);
Var tanh_act(Var x);
Var sigmoid_act(Var x);
Var abs_val(Var x);
Var square(Var x);
/// Sum of every element, as a 1x1 tensor.
Var sum(Var x);

}  // namespace navar::numerics
