#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "navar/tensor.hpp"

namespace navar::numerics {

struct AdamState {
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::uint64_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Zeroed moments shaped like `params`.
AdamState make_adam_state(std::span<const Tensor* const> params);

/// One bias-corrected Adam update. Weight decay enters as the L2 gradient
/// term weight_decay * theta added before the moment updates.
void adam_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads,
               AdamState& state, double learning_rate, double weight_decay);

}  // namespace navar::numerics
