#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "navar/tensor.hpp"

namespace navar {

using numerics::Tensor;

/// Directed summary graph; entry (i, j) is true iff variable i Granger-causes
/// variable j. Lag annotations are optional and only filled by generators.
struct GroundTruthGraph {
  std::size_t variables = 0;
  std::vector<std::uint8_t> adjacency;
  std::vector<std::vector<std::size_t>> lags;

  static GroundTruthGraph empty(std::size_t n);

  bool link(std::size_t cause, std::size_t effect) const {
    return adjacency[cause * variables + effect] != 0;
  }
  void set_link(std::size_t cause, std::size_t effect, bool value = true) {
    adjacency[cause * variables + effect] = value ? 1 : 0;
  }
  std::size_t link_count() const;
  const std::vector<std::size_t>& link_lags(std::size_t cause, std::size_t effect) const;

  friend bool operator==(const GroundTruthGraph&, const GroundTruthGraph&) = default;
};

struct NormalizationStats {
  std::vector<double> mean;
  std::vector<double> stddev;

  friend bool operator==(const NormalizationStats&, const NormalizationStats&) = default;
};

/// One or more replicate series over the same N variables. Each replicate is
/// a T_r x N tensor with one row per time step.
struct TimeSeriesDataset {
  std::vector<Tensor> replicates;
  std::vector<std::string> variable_names;
  std::optional<GroundTruthGraph> truth;
  std::optional<NormalizationStats> normalization;

  std::size_t variables() const noexcept {
    return replicates.empty() ? 0 : replicates.front().cols();
  }
  std::size_t total_steps() const noexcept;
  std::size_t min_steps() const noexcept;

  /// Throws a dimension error when replicates disagree on N or names do not
  /// match.
  void validate() const;
};

struct GeneratorOptions {
  /// Multiplies every noise draw, including the initial values.
  double noise_scale = 1.0;
  /// Simulated steps dropped before the returned window.
  std::size_t burn_in = 100;
};

/// Three-variable nonlinear SCM with lag-1 links 2->1, 3->1, 2->2, 3->2,
/// 1->3, 2->3 (1-based) and unit Gaussian noise.
TimeSeriesDataset generate_toy3(std::size_t steps = 4000, std::uint64_t seed = 0,
                                const GeneratorOptions& options = {});

/// Two-variable SCM with multi-lag coupling:
///   X_t = cos(Y_{t-3} + Y_{t-4} + Y_{t-5}) + eta,  Y_t = X_{t-2} * X_{t-4} + eta
/// with eta ~ N(0, 0.1^2). Truth carries the lag sets.
TimeSeriesDataset generate_lag_scm(std::size_t steps = 4000, std::uint64_t seed = 0,
                                   const GeneratorOptions& options = {});

/// Random sparse stationary VAR(K). Each ordered pair (i, j) is linked with
/// probability `density`; a linked pair gets a coefficient at every lag with
/// magnitude in [0.5, 1] * coeff_scale and random sign. When the companion
/// spectral radius reaches 0.95, lag-k coefficients are multiplied by c^k
/// with c = 0.9 / radius. Replicates share the coefficients.
TimeSeriesDataset generate_linear_var(std::size_t variables, std::size_t steps,
                                      std::size_t lags, double density, double coeff_scale,
                                      std::uint64_t seed, std::size_t replicates = 1,
                                      const GeneratorOptions& options = {});

/// Spectral radius of the VAR companion matrix built from per-lag N x N
/// coefficient matrices.
double companion_spectral_radius(std::span<const Tensor> coefficients);

struct CsvOptions {
  bool has_header = true;
  char delimiter = ',';
  /// When a header column carries this name, consecutive equal values group
  /// rows into replicates and the column is dropped from the data.
  std::string replicate_column = "replicate";
};

TimeSeriesDataset load_csv(const std::string& path, const CsvOptions& options = {});
/// One replicate per file; every file must have the same columns.
TimeSeriesDataset load_csv_replicates(std::span<const std::string> paths,
                                      const CsvOptions& options = {});
/// Writes 17 significant digits. Multi-replicate datasets get a leading
/// replicate column.
void save_csv(const TimeSeriesDataset& dataset, const std::string& path, char delimiter = ',');

GroundTruthGraph load_truth_csv(const std::string& path);
void save_truth_csv(const GroundTruthGraph& truth, const std::string& path,
                    std::span<const std::string> names = {});

/// Leading steps of each replicate used for fitting, given the trailing
/// fraction held out for validation.
std::vector<std::size_t> training_lengths(const TimeSeriesDataset& dataset,
                                          double val_fraction);

NormalizationStats fit_normalization(const TimeSeriesDataset& dataset,
                                     std::span<const std::size_t> fit_lengths);
TimeSeriesDataset apply_normalization(const TimeSeriesDataset& dataset,
                                      const NormalizationStats& stats);

struct NormalizedDataset {
  TimeSeriesDataset dataset;
  NormalizationStats stats;
};

/// Stats from the leading `fit_fraction` of each replicate, applied to all
/// steps.
NormalizedDataset normalize(const TimeSeriesDataset& dataset, double fit_fraction = 1.0);

/// Lag windows for every target step t >= K of every replicate. Windows never
/// cross replicate boundaries.
struct WindowedDataset {
  std::size_t lags = 0;
  std::size_t variables = 0;
  std::size_t samples = 0;
  /// Per input variable: samples x K, column k-1 holds x_{t-k}.
  std::vector<Tensor> windows;
  /// samples x N
  Tensor targets;
  std::vector<std::size_t> replicate;
  std::vector<std::size_t> time;
};

WindowedDataset make_windows(const TimeSeriesDataset& dataset, std::size_t lags);
WindowedDataset gather_windows(const WindowedDataset& source,
                               std::span<const std::size_t> rows);

}  // namespace navar
