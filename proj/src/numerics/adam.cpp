#include "navar/adam.hpp"

#include <cmath>

#include "navar/error.hpp"

namespace navar::numerics {

AdamState make_adam_state(std::span<const Tensor* const> params) {
  AdamState state;
  state.first_moment.reserve(params.size());
  state.second_moment.reserve(params.size());
  for (const Tensor* p : params) {
    state.first_moment.emplace_back(p->shape());
    state.second_moment.emplace_back(p->shape());
  }
  return state;
}

void adam_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads,
               AdamState& state, double learning_rate, double weight_decay) {
  if (!(learning_rate > 0.0)) {
    fail(ErrorCode::kConfig, "learning rate must be positive");
  }
  if (weight_decay < 0.0) fail(ErrorCode::kConfig, "weight decay must be non-negative");
  if (params.size() != grads.size() || params.size() != state.first_moment.size() ||
      params.size() != state.second_moment.size()) {
    fail(ErrorCode::kDimension, "adam_step: parameter, gradient and state counts differ");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!params[k]->same_shape(*grads[k]) || !params[k]->same_shape(state.first_moment[k]) ||
        !params[k]->same_shape(state.second_moment[k])) {
      fail(ErrorCode::kDimension, "adam_step: shape mismatch at parameter " +
                                      std::to_string(k) + " " +
                                      shape_string(params[k]->shape()) + " vs gradient " +
                                      shape_string(grads[k]->shape()));
    }
  }

  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);

  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& theta = *params[k];
    const Tensor& g = *grads[k];
    Tensor& m = state.first_moment[k];
    Tensor& v = state.second_moment[k];
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double gi = g[i] + weight_decay * theta[i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * gi;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * gi * gi;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      theta[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

}  // namespace navar::numerics
