#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "navar/autodiff.hpp"
#include "navar/backbone.hpp"
#include "navar/config.hpp"
#include "navar/data.hpp"

namespace navar {

/// N per-variable contribution networks plus the bias vector beta. The
/// prediction for variable j is beta_j + sum_i c^{i->j}.
class NavarModel {
 public:
  NavarModel(NavarConfig config, std::vector<Backbone> backbones, Tensor beta);

  /// Fresh model: backbone i seeded from (config.seed, i), beta = 0.
  static NavarModel initialized(const NavarConfig& config, std::size_t variables);

  const NavarConfig& config() const noexcept { return config_; }
  std::size_t variables() const noexcept { return backbones_.size(); }

  std::vector<Backbone>& backbones() noexcept { return backbones_; }
  const std::vector<Backbone>& backbones() const noexcept { return backbones_; }
  Tensor& beta() noexcept { return beta_; }
  const Tensor& beta() const noexcept { return beta_; }

  const NormalizationStats& normalization() const noexcept { return normalization_; }
  void set_normalization(NormalizationStats stats) { normalization_ = std::move(stats); }
  const std::vector<std::string>& variable_names() const noexcept { return names_; }
  void set_variable_names(std::vector<std::string> names) { names_ = std::move(names); }

  bool trained() const noexcept { return trained_; }
  void mark_trained() noexcept { trained_ = true; }

  /// Backbone parameters in variable order, then beta.
  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;

 private:
  NavarConfig config_;
  std::vector<Backbone> backbones_;
  Tensor beta_;  // 1 x N
  NormalizationStats normalization_;
  std::vector<std::string> names_;
  bool trained_ = false;
};

/// Model parameters recorded on one graph.
struct BoundModel {
  std::vector<std::vector<Var>> backbones;
  Var beta;
};

/// Differentiable leaves when `trainable`, constants otherwise.
BoundModel bind_model(Graph& graph, const NavarModel& model, bool trainable);

/// Graph outputs for one batch: contributions[i] is B x N with entry (b, j) =
/// c^{i->j}; predictions is B x N.
struct BatchForward {
  std::vector<Var> contributions;
  Var predictions;
};

/// MLP path over lag windows. Predictions are summed over i in ascending
/// order, then beta is added.
BatchForward forward_contributions(const NavarModel& model, const BoundModel& bound,
                                   Graph& graph, const WindowedDataset& batch);

/// Penalized loss averaged over (sample, target) entries:
///   sum((pred - target)^2) / (B N) + lambda * sum_i sum(|c_i|) / (B N)
Var compute_loss(const NavarModel& model, const BatchForward& forward, Graph& graph,
                 const Tensor& targets);
Var compute_loss(const NavarModel& model, const BoundModel& bound, Graph& graph,
                 const WindowedDataset& batch);

/// A run of consecutive observations fed to an LSTM from a zero state.
/// Observation `start` is warm-up; steps start+1 .. start+length-1 are
/// predicted.
struct SequenceChunk {
  std::size_t replicate = 0;
  std::size_t start = 0;
  std::size_t length = 0;
};

/// Splits every replicate into chunks of at most K+1 observations that
/// overlap by one, so each step after the first is predicted exactly once.
std::vector<SequenceChunk> make_chunks(const TimeSeriesDataset& dataset, std::size_t lags);

enum class TargetMask { kAll, kTraining, kValidation };

/// Step-major batch of chunks, padded to the longest one.
struct SequenceBatch {
  std::size_t batch = 0;
  std::size_t steps = 0;  // predicted steps of the longest chunk
  // inputs[s][i]: B x 1 value of variable i fed at step s.
  std::vector<std::vector<Tensor>> inputs;
  // targets[s], mask[s]: B x N; mask is 1 where the step is scored.
  std::vector<Tensor> targets;
  std::vector<Tensor> mask;
  // Origin of the target of (s, b), or npos when padded.
  std::vector<std::vector<std::size_t>> replicate;
  std::vector<std::vector<std::size_t>> time;
  double scored = 0.0;  // number of (s, b) pairs with mask 1
};

SequenceBatch make_sequence_batch(const TimeSeriesDataset& normalized,
                                  std::span<const SequenceChunk> chunks, TargetMask mode,
                                  std::span<const std::size_t> train_lengths = {});

struct SequenceForward {
  // contributions[s][i], predictions[s]: B x N.
  std::vector<std::vector<Var>> contributions;
  std::vector<Var> predictions;
};

SequenceForward forward_sequences(const NavarModel& model, const BoundModel& bound,
                                  Graph& graph, const SequenceBatch& batch);
/// Masked version of the loss above, normalized by scored steps times N.
Var compute_sequence_loss(const NavarModel& model, const SequenceForward& forward,
                          Graph& graph, const SequenceBatch& batch);

struct TrainReport {
  std::vector<double> train_loss;
  std::vector<double> val_mse;  // empty without a validation split
  std::size_t epochs = 0;
  double seconds = 0.0;
};

struct TrainResult {
  NavarModel model;
  TrainReport report;
};

/// Mini-batch Adam over shuffled training windows (or chunks for the LSTM).
/// Normalization stats come from the training portion of each replicate.
TrainResult train(const TimeSeriesDataset& dataset, const NavarConfig& config);

/// Self-describing binary checkpoint; round trips every parameter bitwise.
void save_checkpoint(const NavarModel& model, const std::string& path);
/// A set `expected` that disagrees with the stored backbone is a version error.
NavarModel load_checkpoint(const std::string& path,
                           std::optional<BackboneKind> expected = std::nullopt);

}  // namespace navar
