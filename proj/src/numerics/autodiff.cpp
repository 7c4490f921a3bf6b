#include "navar/autodiff.hpp"

#include <cmath>

#include "navar/error.hpp"

namespace navar::numerics {

namespace {

constexpr std::size_t kNoParent = static_cast<std::size_t>(-1);

Graph& graph_of(Var a) {
  if (a.graph() == nullptr) fail(ErrorCode::kContract, "operation on an unbound variable");
  return *a.graph();
}

Graph& graph_of(Var a, Var b) {
  if (a.graph() != b.graph()) {
    fail(ErrorCode::kContract, "operands recorded on different graphs");
  }
  return graph_of(a);
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    fail(ErrorCode::kDimension, std::string(op) + ": shape mismatch " +
                                    shape_string(a.shape()) + " vs " +
                                    shape_string(b.shape()));
  }
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

template <typename F>
Tensor map(const Tensor& x, F f) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return out;
}

template <typename F>
Tensor zip(const Tensor& a, const Tensor& b, F f) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
  return out;
}

// out += a * b
void gemm_acc(const Tensor& a, const Tensor& b, Tensor& out) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  const double* pa = a.values().data();
  const double* pb = b.values().data();
  double* po = out.values().data();
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = po + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      if (av == 0.0) continue;
      const double* brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
}

// out += a * b^T
void gemm_acc_bt(const Tensor& a, const Tensor& b, Tensor& out) {
  const std::size_t m = a.rows(), n = a.cols(), k = b.rows();
  const double* pa = a.values().data();
  const double* pb = b.values().data();
  double* po = out.values().data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += pa[i * n + j] * pb[p * n + j];
      po[i * k + p] += acc;
    }
  }
}

// out += a^T * b
void gemm_acc_at(const Tensor& a, const Tensor& b, Tensor& out) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  const double* pa = a.values().data();
  const double* pb = b.values().data();
  double* po = out.values().data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* brow = pb + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      if (av == 0.0) continue;
      double* orow = po + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
}

}  // namespace

const Tensor& Var::value() const { return graph_of(*this).value(*this); }

Var Graph::input(Tensor value) {
  return record(Op::kInput, std::move(value), kNoParent, kNoParent, 0.0);
}

Var Graph::parameter(Tensor value) {
  return record(Op::kParameter, std::move(value), kNoParent, kNoParent, 0.0);
}

Var Graph::record(Op op, Tensor value, std::size_t lhs, std::size_t rhs, double scalar) {
  bool requires_grad = op == Op::kParameter;
  if (lhs != kNoParent) requires_grad = requires_grad || nodes_[lhs].requires_grad;
  if (rhs != kNoParent) requires_grad = requires_grad || nodes_[rhs].requires_grad;
  nodes_.push_back(Node{op, std::move(value), Tensor{}, lhs, rhs, scalar, requires_grad});
  return Var(this, nodes_.size() - 1);
}

const Tensor& Graph::grad(Var v) const {
  if (!backward_done_) fail(ErrorCode::kContract, "gradient requested before backward()");
  return nodes_[v.index()].grad;
}

void Graph::clear_gradients() {
  for (Node& n : nodes_) n.grad = Tensor{};
  backward_done_ = false;
}

void Graph::backward(Var root) {
  if (root.graph() != this) fail(ErrorCode::kContract, "backward root belongs to another graph");
  if (backward_done_) {
    fail(ErrorCode::kContract, "backward() called twice without clear_gradients()");
  }
  const Node& r = nodes_[root.index()];
  if (r.value.size() != 1) {
    fail(ErrorCode::kContract,
         "backward root must be scalar, got " + shape_string(r.value.shape()));
  }
  for (Node& n : nodes_) n.grad = Tensor(n.value.shape());
  backward_done_ = true;
  nodes_[root.index()].grad[0] = 1.0;
  for (std::size_t i = root.index() + 1; i-- > 0;) {
    if (nodes_[i].requires_grad) propagate(nodes_[i]);
  }
}

void Graph::propagate(const Node& node) {
  const Tensor& g = node.grad;
  auto wants = [&](std::size_t idx) {
    return idx != kNoParent && nodes_[idx].requires_grad;
  };
  auto acc = [&](std::size_t idx, auto f) {
    Tensor& pg = nodes_[idx].grad;
    for (std::size_t i = 0; i < pg.size(); ++i) pg[i] += f(i);
  };

  switch (node.op) {
    case Op::kInput:
    case Op::kParameter:
      return;
    case Op::kMatMul:
      if (wants(node.lhs)) gemm_acc_bt(g, nodes_[node.rhs].value, nodes_[node.lhs].grad);
      if (wants(node.rhs)) gemm_acc_at(nodes_[node.lhs].value, g, nodes_[node.rhs].grad);
      return;
    case Op::kAdd:
      if (wants(node.lhs)) acc(node.lhs, [&](std::size_t i) { return g[i]; });
      if (wants(node.rhs)) acc(node.rhs, [&](std::size_t i) { return g[i]; });
      return;
    case Op::kSub:
      if (wants(node.lhs)) acc(node.lhs, [&](std::size_t i) { return g[i]; });
      if (wants(node.rhs)) acc(node.rhs, [&](std::size_t i) { return -g[i]; });
      return;
    case Op::kMul: {
      const Tensor& a = nodes_[node.lhs].value;
      const Tensor& b = nodes_[node.rhs].value;
      if (wants(node.lhs)) acc(node.lhs, [&](std::size_t i) { return g[i] * b[i]; });
      if (wants(node.rhs)) acc(node.rhs, [&](std::size_t i) { return g[i] * a[i]; });
      return;
    }
    case Op::kAddRow: {
      if (wants(node.lhs)) acc(node.lhs, [&](std::size_t i) { return g[i]; });
      if (wants(node.rhs)) {
        Tensor& rg = nodes_[node.rhs].grad;
        const std::size_t cols = g.cols();
        for (std::size_t r = 0; r < g.rows(); ++r) {
          for (std::size_t c = 0; c < cols; ++c) rg[c] += g[r * cols + c];
        }
      }
      return;
    }
    case Op::kAddScalar:
      acc(node.lhs, [&](std::size_t i) { return g[i]; });
      return;
    case Op::kScale:
      acc(node.lhs, [&](std::size_t i) { return g[i] * node.scalar; });
      return;
    case Op::kRelu: {
      const Tensor& x = nodes_[node.lhs].value;
      acc(node.lhs, [&](std::size_t i) { return x[i] > 0.0 ? g[i] : 0.0; });
      return;
    }
    case Op::kTanh: {
      const Tensor& y = node.value;
      acc(node.lhs, [&](std::size_t i) { return g[i] * (1.0 - y[i] * y[i]); });
      return;
    }
    case Op::kSigmoid: {
      const Tensor& y = node.value;
      acc(node.lhs, [&](std::size_t i) { return g[i] * y[i] * (1.0 - y[i]); });
      return;
    }
    case Op::kAbs: {
      // Subgradient 0 at the kink.
      const Tensor& x = nodes_[node.lhs].value;
      acc(node.lhs, [&](std::size_t i) {
        return x[i] > 0.0 ? g[i] : (x[i] < 0.0 ? -g[i] : 0.0);
      });
      return;
    }
    case Op::kSquare: {
      const Tensor& x = nodes_[node.lhs].value;
      acc(node.lhs, [&](std::size_t i) { return 2.0 * x[i] * g[i]; });
      return;
    }
    case Op::kSum:
      acc(node.lhs, [&](std::size_t) { return g[0]; });
      return;
  }
}

Var matmul(Var a, Var b) {
  Graph& graph = graph_of(a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.rank() != 2 || y.rank() != 2 || x.cols() != y.rows()) {
    fail(ErrorCode::kDimension, "matmul: incompatible shapes " + shape_string(x.shape()) +
                                    " and " + shape_string(y.shape()));
  }
  Tensor out = Tensor::zeros(x.rows(), y.cols());
  gemm_acc(x, y, out);
  return graph.record(Graph::Op::kMatMul, std::move(out), a.index(), b.index(), 0.0);
}

Var add(Var a, Var b) {
  Graph& graph = graph_of(a, b);
  require_same_shape("add", a.value(), b.value());
  return graph.record(Graph::Op::kAdd,
                      zip(a.value(), b.value(), [](double p, double q) { return p + q; }),
                      a.index(), b.index(), 0.0);
}

Var sub(Var a, Var b) {
  Graph& graph = graph_of(a, b);
  require_same_shape("sub", a.value(), b.value());
  return graph.record(Graph::Op::kSub,
                      zip(a.value(), b.value(), [](double p, double q) { return p - q; }),
                      a.index(), b.index(), 0.0);
}

Var mul(Var a, Var b) {
  Graph& graph = graph_of(a, b);
  require_same_shape("mul", a.value(), b.value());
  return graph.record(Graph::Op::kMul,
                      zip(a.value(), b.value(), [](double p, double q) { return p * q; }),
                      a.index(), b.index(), 0.0);
}

Var add_row(Var matrix, Var row) {
  Graph& graph = graph_of(matrix, row);
  const Tensor& m = matrix.value();
  const Tensor& r = row.value();
  if (r.rows() != 1 || r.cols() != m.cols()) {
    fail(ErrorCode::kDimension, "add_row: row " + shape_string(r.shape()) +
                                    " does not match matrix " + shape_string(m.shape()));
  }
  Tensor out = m;
  const std::size_t cols = m.cols();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t c = 0; c < cols; ++c) out[i * cols + c] += r[c];
  }
  return graph.record(Graph::Op::kAddRow, std::move(out), matrix.index(), row.index(), 0.0);
}

Var add(Var a, double s) {
  return graph_of(a).record(Graph::Op::kAddScalar,
                            map(a.value(), [s](double v) { return v + s; }), a.index(),
                            kNoParent, s);
}

Var mul(Var a, double s) {
  return graph_of(a).record(Graph::Op::kScale,
                            map(a.value(), [s](double v) { return v * s; }), a.index(),
                            kNoParent, s);
}

Var relu(Var x) {
  return graph_of(x).record(Graph::Op::kRelu,
                            map(x.value(), [](double v) { return v > 0.0 ? v : 0.0; }),
                            x.index(), kNoParent, 0.0);
}

Var tanh_act(Var x) {
  return graph_of(x).record(Graph::Op::kTanh,
                            map(x.value(), [](double v) { return std::tanh(v); }),
                            x.index(), kNoParent, 0.0);
}

Var sigmoid_act(Var x) {
  return graph_of(x).record(Graph::Op::kSigmoid, map(x.value(), sigmoid), x.index(),
                            kNoParent, 0.0);
}

Var abs_val(Var x) {
  return graph_of(x).record(Graph::Op::kAbs,
                            map(x.value(), [](double v) { return std::fabs(v); }),
                            x.index(), kNoParent, 0.0);
}

Var square(Var x) {
  return graph_of(x).record(Graph::Op::kSquare,
                            map(x.value(), [](double v) { return v * v; }), x.index(),
                            kNoParent, 0.0);
}

Var sum(Var x) {
  double total = 0.0;
  for (double v : x.value().values()) total += v;
  return graph_of(x).record(Graph::Op::kSum, Tensor::scalar(total), x.index(), kNoParent,
                            0.0);
}

}  // namespace navar::numerics
