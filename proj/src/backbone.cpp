#include "navar/backbone.hpp"

#include <cmath>
#include <random>
#include <utility>

#include "navar/error.hpp"

namespace navar {

const char* backbone_kind_name(BackboneKind kind) {
  return kind == BackboneKind::kMlp ? "mlp" : "lstm";
}

BackboneKind parse_backbone_kind(const std::string& name) {
  if (name == "mlp") return BackboneKind::kMlp;
  if (name == "lstm") return BackboneKind::kLstm;
  fail(ErrorCode::kConfig, "unknown backbone '" + name + "' (expected mlp or lstm)");
}

MlpBackbone::MlpBackbone(std::size_t lags, std::size_t outputs, std::size_t hidden_units,
                         std::size_t hidden_layers)
    : lags_(lags), outputs_(outputs), hidden_units_(hidden_units), hidden_layers_(hidden_layers) {
  if (lags == 0 || outputs == 0 || hidden_units == 0 || hidden_layers == 0) {
    fail(ErrorCode::kConfig, "mlp backbone needs lags, outputs, hidden units and layers >= 1");
  }
  std::size_t fan_in = lags;
  for (std::size_t l = 0; l < hidden_layers; ++l) {
    weights_.push_back(Tensor::zeros(fan_in, hidden_units));
    biases_.push_back(Tensor::zeros(1, hidden_units));
    fan_in = hidden_units;
  }
  weights_.push_back(Tensor::zeros(hidden_units, outputs));
  biases_.push_back(Tensor::zeros(1, outputs));
}

std::vector<Tensor*> MlpBackbone::parameters() {
  std::vector<Tensor*> out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

std::vector<const Tensor*> MlpBackbone::parameters() const {
  std::vector<const Tensor*> out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

Var MlpBackbone::forward(std::span<const Var> bound, Var windows) const {
  if (bound.size() != 2 * weights_.size()) {
    fail(ErrorCode::kContract, "mlp forward: expected " + std::to_string(2 * weights_.size()) +
                                   " bound parameters, got " + std::to_string(bound.size()));
  }
  if (windows.value().cols() != lags_) {
    fail(ErrorCode::kDimension, "mlp forward: window length " +
                                    std::to_string(windows.value().cols()) + " but K = " +
                                    std::to_string(lags_));
  }
  Var h = windows;
  const std::size_t last = weights_.size() - 1;
  for (std::size_t l = 0; l < last; ++l) {
    h = numerics::relu(numerics::add_row(numerics::matmul(h, bound[2 * l]), bound[2 * l + 1]));
  }
  return numerics::add_row(numerics::matmul(h, bound[2 * last]), bound[2 * last + 1]);
}

std::vector<double> MlpBackbone::forward(std::span<const double> window) const {
  if (window.size() != lags_) {
    fail(ErrorCode::kDimension, "mlp forward: window length " + std::to_string(window.size()) +
                                    " but K = " + std::to_string(lags_));
  }
  Graph graph;
  std::vector<Var> bound;
  for (const Tensor* p : parameters()) bound.push_back(graph.input(*p));
  const Var out = forward(bound, graph.input(Tensor::row(window)));
  return out.value().storage();
}

LstmBackbone::LstmBackbone(std::size_t outputs, std::size_t hidden_units)
    : outputs_(outputs), hidden_units_(hidden_units) {
  if (outputs == 0 || hidden_units == 0) {
    fail(ErrorCode::kConfig, "lstm backbone needs outputs and hidden units >= 1");
  }
  for (std::size_t g = 0; g < kGateCount; ++g) {
    input_weights_[g] = Tensor::zeros(1, hidden_units);
    recurrent_weights_[g] = Tensor::zeros(hidden_units, hidden_units);
    gate_biases_[g] = Tensor::zeros(1, hidden_units);
  }
  projection_weight_ = Tensor::zeros(hidden_units, outputs);
  projection_bias_ = Tensor::zeros(1, outputs);
  reset_state();
}

std::vector<Tensor*> LstmBackbone::parameters() {
  std::vector<Tensor*> out;
  for (std::size_t g = 0; g < kGateCount; ++g) {
    out.push_back(&input_weights_[g]);
    out.push_back(&recurrent_weights_[g]);
    out.push_back(&gate_biases_[g]);
  }
  out.push_back(&projection_weight_);
  out.push_back(&projection_bias_);
  return out;
}

std::vector<const Tensor*> LstmBackbone::parameters() const {
  std::vector<const Tensor*> out;
  for (std::size_t g = 0; g < kGateCount; ++g) {
    out.push_back(&input_weights_[g]);
    out.push_back(&recurrent_weights_[g]);
    out.push_back(&gate_biases_[g]);
  }
  out.push_back(&projection_weight_);
  out.push_back(&projection_bias_);
  return out;
}

LstmBackbone::State LstmBackbone::initial_state(Graph& graph, std::size_t batch) const {
  return State{graph.input(Tensor::zeros(batch, hidden_units_)),
               graph.input(Tensor::zeros(batch, hidden_units_))};
}

Var LstmBackbone::step(std::span<const Var> bound, State& state, Var x) const {
  using namespace numerics;
  if (bound.size() != 3 * kGateCount + 2) {
    fail(ErrorCode::kContract, "lstm step: expected 14 bound parameters, got " +
                                   std::to_string(bound.size()));
  }
  if (x.value().cols() != 1) {
    fail(ErrorCode::kDimension, "lstm step: input must be B x 1, got " +
                                    shape_string(x.value().shape()));
  }
  auto pre = [&](std::size_t g) {
    return add_row(add(matmul(x, bound[3 * g]), matmul(state.hidden, bound[3 * g + 1])),
                   bound[3 * g + 2]);
  };
  const Var input_gate = sigmoid_act(pre(kInputGate));
  const Var forget_gate = sigmoid_act(pre(kForgetGate));
  const Var candidate = tanh_act(pre(kCellGate));
  const Var output_gate = sigmoid_act(pre(kOutputGate));
  state.cell = add(mul(forget_gate, state.cell), mul(input_gate, candidate));
  state.hidden = mul(output_gate, tanh_act(state.cell));
  return add_row(matmul(state.hidden, bound[3 * kGateCount]), bound[3 * kGateCount + 1]);
}

void LstmBackbone::reset_state() {
  hidden_state_ = Tensor::zeros(1, hidden_units_);
  cell_state_ = Tensor::zeros(1, hidden_units_);
}

std::vector<double> LstmBackbone::step(double x) {
  Graph graph;
  std::vector<Var> bound;
  for (const Tensor* p : std::as_const(*this).parameters()) bound.push_back(graph.input(*p));
  State state{graph.input(hidden_state_), graph.input(cell_state_)};
  const Var out = step(bound, state, graph.input(Tensor::scalar(x)));
  hidden_state_ = state.hidden.value();
  cell_state_ = state.cell.value();
  return out.value().storage();
}

namespace {

void fill_uniform(Tensor& t, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : t.values()) v = dist(rng);
}

}  // namespace

Backbone init_backbone(BackboneKind kind, std::size_t lags, std::size_t outputs,
                       std::size_t hidden_units, std::size_t hidden_layers,
                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  if (kind == BackboneKind::kMlp) {
    MlpBackbone net(lags, outputs, hidden_units, hidden_layers);
    for (Tensor& w : net.weights()) {
      fill_uniform(w, 1.0 / std::sqrt(static_cast<double>(w.rows())), rng);
    }
    return net;
  }
  if (hidden_layers != 1) {
    fail(ErrorCode::kConfig, "lstm backbone supports exactly one layer, got " +
                                 std::to_string(hidden_layers));
  }
  LstmBackbone net(outputs, hidden_units);
  // Gate fan-in counts the scalar input plus the recurrent state.
  const double gate_bound = 1.0 / std::sqrt(static_cast<double>(hidden_units + 1));
  for (std::size_t g = 0; g < LstmBackbone::kGateCount; ++g) {
    const auto gate = static_cast<LstmBackbone::Gate>(g);
    fill_uniform(net.input_weight(gate), gate_bound, rng);
    fill_uniform(net.recurrent_weight(gate), gate_bound, rng);
  }
  net.gate_bias(LstmBackbone::kForgetGate).fill(1.0);
  fill_uniform(net.projection_weight(), 1.0 / std::sqrt(static_cast<double>(hidden_units)),
               rng);
  return net;
}

std::vector<Tensor*> backbone_parameters(Backbone& backbone) {
  return std::visit([](auto& net) { return net.parameters(); }, backbone);
}

std::vector<const Tensor*> backbone_parameters(const Backbone& backbone) {
  return std::visit([](const auto& net) { return net.parameters(); }, backbone);
}

std::vector<Var> bind_parameters(Graph& graph, std::span<const Tensor* const> params) {
  std::vector<Var> out;
  out.reserve(params.size());
  for (const Tensor* p : params) out.push_back(graph.parameter(*p));
  return out;
}

}  // namespace navar
