#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "navar/autodiff.hpp"
#include "navar/tensor.hpp"

namespace navar {

using numerics::Graph;
using numerics::Tensor;
using numerics::Var;

enum class BackboneKind { kMlp, kLstm };

const char* backbone_kind_name(BackboneKind kind);
BackboneKind parse_backbone_kind(const std::string& name);

/// Contribution network of one input variable over its K-lag window.
///
/// Windows are laid out in lag order: column k-1 holds x_{t-k}. Hidden layers
/// use ReLU; the output layer is linear so contributions may be negative.
class MlpBackbone {
 public:
  MlpBackbone(std::size_t lags, std::size_t outputs, std::size_t hidden_units,
              std::size_t hidden_layers);

  std::size_t lags() const noexcept { return lags_; }
  std::size_t outputs() const noexcept { return outputs_; }
  std::size_t hidden_units() const noexcept { return hidden_units_; }
  std::size_t hidden_layers() const noexcept { return hidden_layers_; }

  // Layer l maps fan_in(l) -> fan_out(l); there are hidden_layers + 1 layers.
  std::vector<Tensor>& weights() noexcept { return weights_; }
  const std::vector<Tensor>& weights() const noexcept { return weights_; }
  std::vector<Tensor>& biases() noexcept { return biases_; }
  const std::vector<Tensor>& biases() const noexcept { return biases_; }

  /// Ordered w0, b0, w1, b1, ...
  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;

  /// windows: B x K. Returns B x N contributions.
  Var forward(std::span<const Var> bound, Var windows) const;
  std::vector<double> forward(std::span<const double> window) const;

 private:
  std::size_t lags_;
  std::size_t outputs_;
  std::size_t hidden_units_;
  std::size_t hidden_layers_;
  std::vector<Tensor> weights_;
  std::vector<Tensor> biases_;
};

/// Single-layer LSTM that consumes one scalar per step and projects its
/// hidden state onto N contributions.
class LstmBackbone {
 public:
  enum Gate : std::size_t { kInputGate = 0, kForgetGate = 1, kCellGate = 2, kOutputGate = 3 };
  static constexpr std::size_t kGateCount = 4;

  struct State {
    Var hidden;
    Var cell;
  };

  LstmBackbone(std::size_t outputs, std::size_t hidden_units);

  std::size_t outputs() const noexcept { return outputs_; }
  std::size_t hidden_units() const noexcept { return hidden_units_; }

  Tensor& input_weight(Gate g) { return input_weights_[g]; }          // 1 x H
  Tensor& recurrent_weight(Gate g) { return recurrent_weights_[g]; }  // H x H
  Tensor& gate_bias(Gate g) { return gate_biases_[g]; }               // 1 x H
  Tensor& projection_weight() { return projection_weight_; }          // H x N
  Tensor& projection_bias() { return projection_bias_; }              // 1 x N

  /// Per gate (input, forget, cell, output): input weight, recurrent weight,
  /// bias; then the projection weight and bias.
  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;

  State initial_state(Graph& graph, std::size_t batch) const;
  /// x: B x 1 at the current step. Advances `state`, returns B x N.
  Var step(std::span<const Var> bound, State& state, Var x) const;

  // Single-sequence convenience path over the transient state below.
  void reset_state();
  std::vector<double> step(double x);

 private:
  std::size_t outputs_;
  std::size_t hidden_units_;
  std::array<Tensor, kGateCount> input_weights_;
  std::array<Tensor, kGateCount> recurrent_weights_;
  std::array<Tensor, kGateCount> gate_biases_;
  Tensor projection_weight_;
  Tensor projection_bias_;
  Tensor hidden_state_;
  Tensor cell_state_;
};

using Backbone = std::variant<MlpBackbone, LstmBackbone>;

/// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero except
/// the LSTM forget gate bias, which starts at 1.
Backbone init_backbone(BackboneKind kind, std::size_t lags, std::size_t outputs,
                       std::size_t hidden_units, std::size_t hidden_layers,
                       std::uint64_t seed);

std::vector<Tensor*> backbone_parameters(Backbone& backbone);
std::vector<const Tensor*> backbone_parameters(const Backbone& backbone);

/// Records each parameter as a differentiable leaf on `graph`.
std::vector<Var> bind_parameters(Graph& graph, std::span<const Tensor* const> params);

}  // namespace navar
