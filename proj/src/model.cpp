#include "navar/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "navar/adam.hpp"
#include "navar/error.hpp"

namespace navar {

using namespace numerics;

namespace {

constexpr double kDivergenceLimit = 1e6;
constexpr std::size_t kNoOrigin = static_cast<std::size_t>(-1);

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

constexpr std::uint64_t kShuffleStream = 0xffffffffull;

}  // namespace

NavarModel::NavarModel(NavarConfig config, std::vector<Backbone> backbones, Tensor beta)
    : config_(config), backbones_(std::move(backbones)), beta_(std::move(beta)) {
  if (beta_.rows() != 1 || beta_.cols() != backbones_.size()) {
    fail(ErrorCode::kDimension, "beta must be 1 x N with N = backbone count");
  }
}

NavarModel NavarModel::initialized(const NavarConfig& config, std::size_t variables) {
  config.validate();
  if (variables == 0) fail(ErrorCode::kDimension, "model needs at least one variable");
  std::vector<Backbone> nets;
  nets.reserve(variables);
  for (std::size_t i = 0; i < variables; ++i) {
    nets.push_back(init_backbone(config.backbone, config.lags, variables, config.hidden_units,
                                 config.hidden_layers, derive_seed(config.seed, i)));
  }
  return NavarModel(config, std::move(nets), Tensor::zeros(1, variables));
}

std::vector<Tensor*> NavarModel::parameters() {
  std::vector<Tensor*> out;
  for (Backbone& b : backbones_) {
    for (Tensor* p : backbone_parameters(b)) out.push_back(p);
  }
  out.push_back(&beta_);
  return out;
}

std::vector<const Tensor*> NavarModel::parameters() const {
  std::vector<const Tensor*> out;
  for (const Backbone& b : backbones_) {
    for (const Tensor* p : backbone_parameters(b)) out.push_back(p);
  }
  out.push_back(&beta_);
  return out;
}

BoundModel bind_model(Graph& graph, const NavarModel& model, bool trainable) {
  BoundModel bound;
  for (const Backbone& b : model.backbones()) {
    std::vector<Var> vars;
    for (const Tensor* p : backbone_parameters(b)) {
      vars.push_back(trainable ? graph.parameter(*p) : graph.input(*p));
    }
    bound.backbones.push_back(std::move(vars));
  }
  bound.beta = trainable ? graph.parameter(model.beta()) : graph.input(model.beta());
  return bound;
}

BatchForward forward_contributions(const NavarModel& model, const BoundModel& bound,
                                   Graph& graph, const WindowedDataset& batch) {
  const std::size_t n = model.variables();
  if (model.config().backbone != BackboneKind::kMlp) {
    fail(ErrorCode::kUnsupported, "window forward requires an mlp backbone");
  }
  if (batch.variables != n || batch.windows.size() != n) {
    fail(ErrorCode::kDimension, "batch has " + std::to_string(batch.variables) +
                                    " variables, model has " + std::to_string(n));
  }
  if (batch.lags != model.config().lags) {
    fail(ErrorCode::kDimension, "batch windows have K = " + std::to_string(batch.lags) +
                                    ", model expects " + std::to_string(model.config().lags));
  }
  if (batch.samples == 0) fail(ErrorCode::kDimension, "empty batch");
  BatchForward out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& net = std::get<MlpBackbone>(model.backbones()[i]);
    out.contributions.push_back(net.forward(bound.backbones[i], graph.input(batch.windows[i])));
  }
  Var total = out.contributions[0];
  for (std::size_t i = 1; i < n; ++i) total = add(total, out.contributions[i]);
  out.predictions = add_row(total, bound.beta);
  return out;
}

Var compute_loss(const NavarModel& model, const BatchForward& forward, Graph& graph,
                 const Tensor& targets) {
  const Tensor& pred = forward.predictions.value();
  if (!pred.same_shape(targets)) {
    fail(ErrorCode::kDimension, "loss: predictions " + shape_string(pred.shape()) +
                                    " vs targets " + shape_string(targets.shape()));
  }
  const double entries = static_cast<double>(pred.size());
  Var mse = mul(sum(square(sub(forward.predictions, graph.input(targets)))), 1.0 / entries);
  const double lambda = model.config().lambda;
  if (lambda == 0.0) return mse;
  Var penalty = sum(abs_val(forward.contributions[0]));
  for (std::size_t i = 1; i < forward.contributions.size(); ++i) {
    penalty = add(penalty, sum(abs_val(forward.contributions[i])));
  }
  return add(mse, mul(penalty, lambda / entries));
}

Var compute_loss(const NavarModel& model, const BoundModel& bound, Graph& graph,
                 const WindowedDataset& batch) {
  const BatchForward fwd = forward_contributions(model, bound, graph, batch);
  return compute_loss(model, fwd, graph, batch.targets);
}

std::vector<SequenceChunk> make_chunks(const TimeSeriesDataset& dataset, std::size_t lags) {
  if (lags == 0) fail(ErrorCode::kConfig, "K must be >= 1");
  std::vector<SequenceChunk> chunks;
  for (std::size_t r = 0; r < dataset.replicates.size(); ++r) {
    const std::size_t steps = dataset.replicates[r].rows();
    if (steps < 2) {
      fail(ErrorCode::kDatasetTooShort,
           "replicate " + std::to_string(r) + " needs at least 2 steps for the lstm backbone");
    }
    for (std::size_t start = 0; start + 1 < steps; start += lags) {
      chunks.push_back({r, start, std::min(lags + 1, steps - start)});
    }
  }
  return chunks;
}

SequenceBatch make_sequence_batch(const TimeSeriesDataset& normalized,
                                  std::span<const SequenceChunk> chunks, TargetMask mode,
                                  std::span<const std::size_t> train_lengths) {
  if (chunks.empty()) fail(ErrorCode::kDimension, "empty sequence batch");
  if (mode != TargetMask::kAll && train_lengths.size() != normalized.replicates.size()) {
    fail(ErrorCode::kDimension, "sequence batch needs one training length per replicate");
  }
  const std::size_t n = normalized.variables();
  SequenceBatch b;
  b.batch = chunks.size();
  for (const SequenceChunk& c : chunks) b.steps = std::max(b.steps, c.length - 1);
  b.inputs.assign(b.steps, std::vector<Tensor>(n, Tensor::zeros(b.batch, 1)));
  b.targets.assign(b.steps, Tensor::zeros(b.batch, n));
  b.mask.assign(b.steps, Tensor::zeros(b.batch, n));
  b.replicate.assign(b.steps, std::vector<std::size_t>(b.batch, kNoOrigin));
  b.time.assign(b.steps, std::vector<std::size_t>(b.batch, kNoOrigin));
  for (std::size_t col = 0; col < chunks.size(); ++col) {
    const SequenceChunk& c = chunks[col];
    const Tensor& x = normalized.replicates[c.replicate];
    for (std::size_t s = 0; s + 1 < c.length; ++s) {
      const std::size_t t_in = c.start + s;
      const std::size_t t_out = t_in + 1;
      bool scored = true;
      if (mode == TargetMask::kTraining) scored = t_out < train_lengths[c.replicate];
      if (mode == TargetMask::kValidation) scored = t_out >= train_lengths[c.replicate];
      for (std::size_t i = 0; i < n; ++i) {
        b.inputs[s][i](col, 0) = x(t_in, i);
        b.targets[s](col, i) = x(t_out, i);
        b.mask[s](col, i) = scored ? 1.0 : 0.0;
      }
      if (scored) {
        b.replicate[s][col] = c.replicate;
        b.time[s][col] = t_out;
        b.scored += 1.0;
      }
    }
  }
  return b;
}

SequenceForward forward_sequences(const NavarModel& model, const BoundModel& bound,
                                  Graph& graph, const SequenceBatch& batch) {
  const std::size_t n = model.variables();
  if (model.config().backbone != BackboneKind::kLstm) {
    fail(ErrorCode::kUnsupported, "sequence forward requires an lstm backbone");
  }
  if (batch.steps > 0 && batch.inputs[0].size() != n) {
    fail(ErrorCode::kDimension, "sequence batch has " + std::to_string(batch.inputs[0].size()) +
                                    " variables, model has " + std::to_string(n));
  }
  SequenceForward out;
  out.contributions.assign(batch.steps, std::vector<Var>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& net = std::get<LstmBackbone>(model.backbones()[i]);
    auto state = net.initial_state(graph, batch.batch);
    for (std::size_t s = 0; s < batch.steps; ++s) {
      out.contributions[s][i] =
          net.step(bound.backbones[i], state, graph.input(batch.inputs[s][i]));
    }
  }
  for (std::size_t s = 0; s < batch.steps; ++s) {
    Var total = out.contributions[s][0];
    for (std::size_t i = 1; i < n; ++i) total = add(total, out.contributions[s][i]);
    out.predictions.push_back(add_row(total, bound.beta));
  }
  return out;
}

Var compute_sequence_loss(const NavarModel& model, const SequenceForward& forward,
                          Graph& graph, const SequenceBatch& batch) {
  if (batch.scored == 0.0) fail(ErrorCode::kDimension, "sequence batch has no scored steps");
  const double entries = batch.scored * static_cast<double>(model.variables());
  const double lambda = model.config().lambda;
  Var squared;
  Var penalty;
  for (std::size_t s = 0; s < batch.steps; ++s) {
    const Var mask = graph.input(batch.mask[s]);
    const Var err =
        sum(square(mul(sub(forward.predictions[s], graph.input(batch.targets[s])), mask)));
    squared = s == 0 ? err : add(squared, err);
    if (lambda != 0.0) {
      for (const Var& c : forward.contributions[s]) {
        const Var a = sum(abs_val(mul(c, mask)));
        penalty = penalty.graph() ? add(penalty, a) : a;
      }
    }
  }
  Var loss = mul(squared, 1.0 / entries);
  if (lambda != 0.0) loss = add(loss, mul(penalty, lambda / entries));
  return loss;
}

namespace {

void apply_update(NavarModel& model, Graph& graph, const BoundModel& bound, Var loss,
                  AdamState& adam) {
  graph.backward(loss);
  std::vector<const Tensor*> grads;
  for (const auto& vars : bound.backbones) {
    for (const Var& v : vars) grads.push_back(&graph.grad(v));
  }
  grads.push_back(&graph.grad(bound.beta));
  const auto params = model.parameters();
  adam_step(params, grads, adam, model.config().learning_rate, model.config().mu);
}

void check_loss(double loss, std::size_t epoch) {
  if (!std::isfinite(loss) || loss > kDivergenceLimit) {
    fail(ErrorCode::kDivergence, "training diverged at epoch " + std::to_string(epoch) +
                                     " (loss " + std::to_string(loss) + ")");
  }
}

double window_mse(const NavarModel& model, const WindowedDataset& windows) {
  Graph graph;
  const BoundModel bound = bind_model(graph, model, false);
  const BatchForward fwd = forward_contributions(model, bound, graph, windows);
  const Tensor& pred = fwd.predictions.value();
  double total = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const double d = pred[k] - windows.targets[k];
    total += d * d;
  }
  return total / static_cast<double>(pred.size());
}

double sequence_mse(const NavarModel& model, const SequenceBatch& batch) {
  Graph graph;
  const BoundModel bound = bind_model(graph, model, false);
  const SequenceForward fwd = forward_sequences(model, bound, graph, batch);
  double total = 0.0;
  for (std::size_t s = 0; s < batch.steps; ++s) {
    const Tensor& pred = fwd.predictions[s].value();
    for (std::size_t k = 0; k < pred.size(); ++k) {
      const double d = (pred[k] - batch.targets[s][k]) * batch.mask[s][k];
      total += d * d;
    }
  }
  return total / (batch.scored * static_cast<double>(model.variables()));
}

void train_windows(NavarModel& model, const TimeSeriesDataset& normalized,
                   std::span<const std::size_t> train_lengths, TrainReport& report) {
  const NavarConfig& cfg = model.config();
  const WindowedDataset all = make_windows(normalized, cfg.lags);
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> val_rows;
  for (std::size_t r = 0; r < all.samples; ++r) {
    (all.time[r] < train_lengths[all.replicate[r]] ? train_rows : val_rows).push_back(r);
  }
  if (train_rows.empty()) {
    fail(ErrorCode::kDatasetTooShort, "no training windows after the validation split");
  }
  const std::optional<WindowedDataset> val =
      val_rows.empty() ? std::nullopt : std::optional(gather_windows(all, val_rows));

  const auto params = std::as_const(model).parameters();
  AdamState adam = make_adam_state(params);
  std::mt19937_64 rng(derive_seed(cfg.seed, kShuffleStream));

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(train_rows.begin(), train_rows.end(), rng);
    double weighted = 0.0;
    for (std::size_t begin = 0; begin < train_rows.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(begin + cfg.batch_size, train_rows.size());
      const WindowedDataset batch = gather_windows(
          all, std::span<const std::size_t>(train_rows).subspan(begin, end - begin));
      Graph graph;
      const BoundModel bound = bind_model(graph, model, true);
      const Var loss = compute_loss(model, bound, graph, batch);
      const double value = loss.value()[0];
      check_loss(value, epoch);
      weighted += value * static_cast<double>(end - begin);
      apply_update(model, graph, bound, loss, adam);
    }
    report.train_loss.push_back(weighted / static_cast<double>(train_rows.size()));
    if (val) report.val_mse.push_back(window_mse(model, *val));
    report.epochs = epoch;
  }
}

void train_sequences(NavarModel& model, const TimeSeriesDataset& normalized,
                     std::span<const std::size_t> train_lengths, TrainReport& report) {
  const NavarConfig& cfg = model.config();
  const std::vector<SequenceChunk> chunks = make_chunks(normalized, cfg.lags);
  std::vector<SequenceChunk> train_chunks;
  std::vector<SequenceChunk> val_chunks;
  for (const SequenceChunk& c : chunks) {
    if (c.start + 1 < train_lengths[c.replicate]) train_chunks.push_back(c);
    if (c.start + c.length - 1 >= train_lengths[c.replicate]) val_chunks.push_back(c);
  }
  if (train_chunks.empty()) {
    fail(ErrorCode::kDatasetTooShort, "no training sequences after the validation split");
  }
  const std::optional<SequenceBatch> val =
      val_chunks.empty() ? std::nullopt
                         : std::optional(make_sequence_batch(normalized, val_chunks,
                                                             TargetMask::kValidation,
                                                             train_lengths));

  const auto params = std::as_const(model).parameters();
  AdamState adam = make_adam_state(params);
  std::mt19937_64 rng(derive_seed(cfg.seed, kShuffleStream));
  std::vector<std::size_t> order(train_chunks.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double weighted = 0.0;
    double scored = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(begin + cfg.batch_size, order.size());
      std::vector<SequenceChunk> picked;
      for (std::size_t k = begin; k < end; ++k) picked.push_back(train_chunks[order[k]]);
      const SequenceBatch batch =
          make_sequence_batch(normalized, picked, TargetMask::kTraining, train_lengths);
      if (batch.scored == 0.0) continue;
      Graph graph;
      const BoundModel bound = bind_model(graph, model, true);
      const SequenceForward fwd = forward_sequences(model, bound, graph, batch);
      const Var loss = compute_sequence_loss(model, fwd, graph, batch);
      const double value = loss.value()[0];
      check_loss(value, epoch);
      weighted += value * batch.scored;
      scored += batch.scored;
      apply_update(model, graph, bound, loss, adam);
    }
    report.train_loss.push_back(weighted / scored);
    if (val && val->scored > 0.0) report.val_mse.push_back(sequence_mse(model, *val));
    report.epochs = epoch;
  }
}

}  // namespace

TrainResult train(const TimeSeriesDataset& dataset, const NavarConfig& config) {
  config.validate();
  dataset.validate();
  const std::size_t n = dataset.variables();
  if (n < 2) fail(ErrorCode::kDimension, "training needs at least 2 variables");
  for (const Tensor& r : dataset.replicates) {
    if (config.backbone == BackboneKind::kMlp && r.rows() <= config.lags) {
      fail(ErrorCode::kDatasetTooShort, "replicate with T = " + std::to_string(r.rows()) +
                                            " is not longer than K = " +
                                            std::to_string(config.lags));
    }
    if (config.backbone == BackboneKind::kLstm && r.rows() < 2) {
      fail(ErrorCode::kDatasetTooShort, "lstm training needs replicates of at least 2 steps");
    }
  }
  const auto started = std::chrono::steady_clock::now();
  const std::vector<std::size_t> lengths = training_lengths(dataset, config.val_fraction);
  NormalizationStats stats = fit_normalization(dataset, lengths);
  const TimeSeriesDataset normalized = apply_normalization(dataset, stats);

  NavarModel model = NavarModel::initialized(config, n);
  model.set_normalization(std::move(stats));
  model.set_variable_names(dataset.variable_names);

  TrainReport report;
  if (config.backbone == BackboneKind::kMlp) {
    train_windows(model, normalized, lengths, report);
  } else {
    train_sequences(model, normalized, lengths, report);
  }
  model.mark_trained();
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return TrainResult{std::move(model), std::move(report)};
}

}  // namespace navar
