#include "navar/data.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "navar/error.hpp"

namespace navar {

GroundTruthGraph GroundTruthGraph::empty(std::size_t n) {
  GroundTruthGraph g;
  g.variables = n;
  g.adjacency.assign(n * n, 0);
  return g;
}

std::size_t GroundTruthGraph::link_count() const {
  return static_cast<std::size_t>(std::count(adjacency.begin(), adjacency.end(), 1));
}

const std::vector<std::size_t>& GroundTruthGraph::link_lags(std::size_t cause,
                                                          std::size_t effect) const {
  static const std::vector<std::size_t> kNone;
  if (lags.empty()) return kNone;
  return lags[cause * variables + effect];
}

std::size_t TimeSeriesDataset::total_steps() const noexcept {
  std::size_t total = 0;
  for (const Tensor& r : replicates) total += r.rows();
  return total;
}

std::size_t TimeSeriesDataset::min_steps() const noexcept {
  std::size_t shortest = replicates.empty() ? 0 : replicates.front().rows();
  for (const Tensor& r : replicates) shortest = std::min(shortest, r.rows());
  return shortest;
}

void TimeSeriesDataset::validate() const {
  if (replicates.empty()) fail(ErrorCode::kDimension, "dataset has no replicates");
  const std::size_t n = variables();
  for (std::size_t r = 0; r < replicates.size(); ++r) {
    if (replicates[r].cols() != n) {
      fail(ErrorCode::kDimension, "replicate " + std::to_string(r) + " has " +
                                      std::to_string(replicates[r].cols()) +
                                      " variables, expected " + std::to_string(n));
    }
  }
  if (!variable_names.empty() && variable_names.size() != n) {
    fail(ErrorCode::kDimension, "dataset has " + std::to_string(variable_names.size()) +
                                    " names for " + std::to_string(n) + " variables");
  }
  if (truth && truth->variables != n) {
    fail(ErrorCode::kDimension, "truth graph is " + std::to_string(truth->variables) +
                                    "x" + std::to_string(truth->variables) + " but data has " +
                                    std::to_string(n) + " variables");
  }
}

namespace {

std::vector<std::string> default_names(std::size_t n) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back("X" + std::to_string(i + 1));
  return names;
}

// Simulates `history + burn_in + steps` rows with `next(row, sim)` filling
// row t from earlier rows, then keeps the final `steps` rows.
template <typename Step>
Tensor simulate(std::size_t n, std::size_t history, std::size_t steps,
                const GeneratorOptions& options, double init_sigma, std::mt19937_64& rng,
                Step next) {
  const std::size_t total = history + options.burn_in + steps;
  Tensor sim = Tensor::zeros(total, n);
  std::normal_distribution<double> init(0.0, 1.0);
  for (std::size_t t = 0; t < history; ++t) {
    for (std::size_t i = 0; i < n; ++i) sim(t, i) = options.noise_scale * init_sigma * init(rng);
  }
  for (std::size_t t = history; t < total; ++t) next(t, sim);
  Tensor out = Tensor::zeros(steps, n);
  const std::size_t offset = total - steps;
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t i = 0; i < n; ++i) out(t, i) = sim(offset + t, i);
  }
  return out;
}

void require_steps(std::size_t steps, const char* name) {
  if (steps < 10) {
    fail(ErrorCode::kConfig, std::string(name) + " needs at least 10 steps, got " +
                                 std::to_string(steps));
  }
}

}  // namespace

TimeSeriesDataset generate_toy3(std::size_t steps, std::uint64_t seed,
                                const GeneratorOptions& options) {
  require_steps(steps, "toy3");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double s = options.noise_scale;
  Tensor series = simulate(3, 1, steps, options, 1.0, rng, [&](std::size_t t, Tensor& x) {
    const double x1 = x(t - 1, 0), x2 = x(t - 1, 1), x3 = x(t - 1, 2);
    x(t, 0) = std::cos(x2) + std::tanh(x3) + s * noise(rng);
    x(t, 1) = 0.35 * x2 + x3 + s * noise(rng);
    x(t, 2) = std::fabs(0.5 * x1) + std::sin(2.0 * x2) + s * noise(rng);
  });

  TimeSeriesDataset ds;
  ds.replicates.push_back(std::move(series));
  ds.variable_names = default_names(3);
  GroundTruthGraph truth = GroundTruthGraph::empty(3);
  truth.lags.assign(9, {});
  // (cause, effect), 0-based.
  constexpr std::pair<std::size_t, std::size_t> kLinks[] = {{1, 0}, {2, 0}, {1, 1},
                                                             {2, 1}, {0, 2}, {1, 2}};
  for (auto [c, e] : kLinks) {
    truth.set_link(c, e);
    truth.lags[c * 3 + e] = {1};
  }
  ds.truth = std::move(truth);
  return ds;
}

TimeSeriesDataset generate_lag_scm(std::size_t steps, std::uint64_t seed,
                                   const GeneratorOptions& options) {
  require_steps(steps, "lag scm");
  constexpr double kNoiseSigma = 0.1;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, kNoiseSigma);
  const double s = options.noise_scale;
  Tensor series =
      simulate(2, 5, steps, options, kNoiseSigma, rng, [&](std::size_t t, Tensor& v) {
        v(t, 0) = std::cos(v(t - 3, 1) + v(t - 4, 1) + v(t - 5, 1)) + s * noise(rng);
        v(t, 1) = v(t - 2, 0) * v(t - 4, 0) + s * noise(rng);
      });

  TimeSeriesDataset ds;
  ds.replicates.push_back(std::move(series));
  ds.variable_names = {"X", "Y"};
  GroundTruthGraph truth = GroundTruthGraph::empty(2);
  truth.lags.assign(4, {});
  truth.set_link(1, 0);
  truth.lags[1 * 2 + 0] = {3, 4, 5};
  truth.set_link(0, 1);
  truth.lags[0 * 2 + 1] = {2, 4};
  ds.truth = std::move(truth);
  return ds;
}

double companion_spectral_radius(std::span<const Tensor> coefficients) {
  if (coefficients.empty()) return 0.0;
  const auto n = static_cast<Eigen::Index>(coefficients.front().rows());
  const auto k = static_cast<Eigen::Index>(coefficients.size());
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n * k, n * k);
  // State (x_{t-1}, ..., x_{t-K}); x_t = sum_k A_k^T x_{t-k}.
  for (Eigen::Index lag = 0; lag < k; ++lag) {
    const Tensor& a = coefficients[static_cast<std::size_t>(lag)];
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        companion(j, lag * n + i) =
            a(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      }
    }
  }
  for (Eigen::Index r = n; r < n * k; ++r) companion(r, r - n) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  if (solver.info() != Eigen::Success) return std::numeric_limits<double>::quiet_NaN();
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

TimeSeriesDataset generate_linear_var(std::size_t variables, std::size_t steps,
                                      std::size_t lags, double density, double coeff_scale,
                                      std::uint64_t seed, std::size_t replicates,
                                      const GeneratorOptions& options) {
  if (variables == 0 || lags == 0 || replicates == 0) {
    fail(ErrorCode::kConfig, "linear var needs N, K and replicates >= 1");
  }
  if (!(density > 0.0 && density <= 1.0)) {
    fail(ErrorCode::kConfig, "linear var density must lie in (0, 1]");
  }
  if (!(coeff_scale > 0.0)) fail(ErrorCode::kConfig, "linear var coeff_scale must be > 0");
  require_steps(steps, "linear var");

  constexpr double kMaxRadius = 0.95;
  constexpr double kTargetRadius = 0.9;
  constexpr int kMaxDraws = 100;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Tensor> coefficients;
  GroundTruthGraph truth;
  bool accepted = false;
  for (int draw = 0; draw < kMaxDraws && !accepted; ++draw) {
    coefficients.assign(lags, Tensor::zeros(variables, variables));
    truth = GroundTruthGraph::empty(variables);
    truth.lags.assign(variables * variables, {});
    for (std::size_t i = 0; i < variables; ++i) {
      for (std::size_t j = 0; j < variables; ++j) {
        if (unit(rng) >= density) continue;
        truth.set_link(i, j);
        for (std::size_t k = 0; k < lags; ++k) {
          const double magnitude = coeff_scale * (0.5 + 0.5 * unit(rng));
          coefficients[k](i, j) = unit(rng) < 0.5 ? -magnitude : magnitude;
          truth.lags[i * variables + j].push_back(k + 1);
        }
      }
    }
    const double radius = companion_spectral_radius(coefficients);
    if (!std::isfinite(radius)) continue;
    if (radius < kMaxRadius) {
      accepted = true;
      break;
    }
    // Scaling A_k by c^k scales every companion eigenvalue by exactly c.
    const double shrink = kTargetRadius / radius;
    double factor = 1.0;
    for (Tensor& a : coefficients) {
      factor *= shrink;
      for (double& v : a.values()) v *= factor;
    }
    const double shrunk = companion_spectral_radius(coefficients);
    accepted = std::isfinite(shrunk) && shrunk < kMaxRadius;
  }
  if (!accepted) {
    fail(ErrorCode::kGeneration, "could not draw stable VAR coefficients in " +
                                     std::to_string(kMaxDraws) + " attempts");
  }

  TimeSeriesDataset ds;
  std::normal_distribution<double> noise(0.0, 1.0);
  const double s = options.noise_scale;
  for (std::size_t r = 0; r < replicates; ++r) {
    ds.replicates.push_back(
        simulate(variables, lags, steps, options, 1.0, rng, [&](std::size_t t, Tensor& x) {
          for (std::size_t j = 0; j < variables; ++j) {
            double value = 0.0;
            for (std::size_t k = 0; k < lags; ++k) {
              for (std::size_t i = 0; i < variables; ++i) {
                value += coefficients[k](i, j) * x(t - k - 1, i);
              }
            }
            x(t, j) = value + s * noise(rng);
          }
        }));
  }
  ds.variable_names = default_names(variables);
  ds.truth = std::move(truth);
  return ds;
}

std::vector<std::size_t> training_lengths(const TimeSeriesDataset& dataset,
                                          double val_fraction) {
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
    fail(ErrorCode::kConfig, "val_fraction must lie in [0, 1)");
  }
  std::vector<std::size_t> lengths;
  for (const Tensor& r : dataset.replicates) {
    const auto held_out =
        static_cast<std::size_t>(std::floor(val_fraction * static_cast<double>(r.rows())));
    lengths.push_back(r.rows() - held_out);
  }
  return lengths;
}

NormalizationStats fit_normalization(const TimeSeriesDataset& dataset,
                                     std::span<const std::size_t> fit_lengths) {
  dataset.validate();
  if (fit_lengths.size() != dataset.replicates.size()) {
    fail(ErrorCode::kDimension, "fit range count does not match replicate count");
  }
  const std::size_t n = dataset.variables();
  NormalizationStats stats{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  std::size_t count = 0;
  for (std::size_t r = 0; r < dataset.replicates.size(); ++r) {
    const Tensor& x = dataset.replicates[r];
    const std::size_t len = std::min(fit_lengths[r], x.rows());
    for (std::size_t t = 0; t < len; ++t) {
      for (std::size_t i = 0; i < n; ++i) stats.mean[i] += x(t, i);
    }
    count += len;
  }
  if (count == 0) fail(ErrorCode::kDatasetTooShort, "normalization fit range is empty");
  for (double& m : stats.mean) m /= static_cast<double>(count);
  for (std::size_t r = 0; r < dataset.replicates.size(); ++r) {
    const Tensor& x = dataset.replicates[r];
    const std::size_t len = std::min(fit_lengths[r], x.rows());
    for (std::size_t t = 0; t < len; ++t) {
      for (std::size_t i = 0; i < n; ++i) {
        const double d = x(t, i) - stats.mean[i];
        stats.stddev[i] += d * d;
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    stats.stddev[i] = std::sqrt(stats.stddev[i] / static_cast<double>(count));
    if (!(stats.stddev[i] > 0.0)) {
      const std::string name =
          dataset.variable_names.empty() ? std::to_string(i) : dataset.variable_names[i];
      fail(ErrorCode::kConstantVariable,
           "variable '" + name + "' is constant over the fit range");
    }
  }
  return stats;
}

TimeSeriesDataset apply_normalization(const TimeSeriesDataset& dataset,
                                      const NormalizationStats& stats) {
  dataset.validate();
  const std::size_t n = dataset.variables();
  if (stats.mean.size() != n || stats.stddev.size() != n) {
    fail(ErrorCode::kDimension, "normalization stats cover " +
                                    std::to_string(stats.mean.size()) +
                                    " variables, dataset has " + std::to_string(n));
  }
  TimeSeriesDataset out = dataset;
  for (Tensor& x : out.replicates) {
    for (std::size_t t = 0; t < x.rows(); ++t) {
      for (std::size_t i = 0; i < n; ++i) x(t, i) = (x(t, i) - stats.mean[i]) / stats.stddev[i];
    }
  }
  out.normalization = stats;
  return out;
}

NormalizedDataset normalize(const TimeSeriesDataset& dataset, double fit_fraction) {
  if (!(fit_fraction > 0.0 && fit_fraction <= 1.0)) {
    fail(ErrorCode::kConfig, "normalization fit fraction must lie in (0, 1]");
  }
  const auto lengths = training_lengths(dataset, 1.0 - fit_fraction);
  NormalizationStats stats = fit_normalization(dataset, lengths);
  return NormalizedDataset{apply_normalization(dataset, stats), stats};
}

WindowedDataset make_windows(const TimeSeriesDataset& dataset, std::size_t lags) {
  dataset.validate();
  if (lags == 0) fail(ErrorCode::kConfig, "lag window K must be >= 1");
  const std::size_t n = dataset.variables();
  std::size_t samples = 0;
  for (const Tensor& x : dataset.replicates) {
    if (x.rows() <= lags) {
      fail(ErrorCode::kDatasetTooShort, "replicate with " + std::to_string(x.rows()) +
                                            " steps cannot supply a window of K = " +
                                            std::to_string(lags));
    }
    samples += x.rows() - lags;
  }
  WindowedDataset w;
  w.lags = lags;
  w.variables = n;
  w.samples = samples;
  w.windows.assign(n, Tensor::zeros(samples, lags));
  w.targets = Tensor::zeros(samples, n);
  w.replicate.reserve(samples);
  w.time.reserve(samples);
  std::size_t row = 0;
  for (std::size_t r = 0; r < dataset.replicates.size(); ++r) {
    const Tensor& x = dataset.replicates[r];
    for (std::size_t t = lags; t < x.rows(); ++t, ++row) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 1; k <= lags; ++k) w.windows[i](row, k - 1) = x(t - k, i);
        w.targets(row, i) = x(t, i);
      }
      w.replicate.push_back(r);
      w.time.push_back(t);
    }
  }
  return w;
}

WindowedDataset gather_windows(const WindowedDataset& source,
                               std::span<const std::size_t> rows) {
  WindowedDataset w;
  w.lags = source.lags;
  w.variables = source.variables;
  w.samples = rows.size();
  w.windows.assign(source.variables, Tensor::zeros(rows.size(), source.lags));
  w.targets = Tensor::zeros(rows.size(), source.variables);
  for (std::size_t s = 0; s < rows.size(); ++s) {
    const std::size_t from = rows[s];
    if (from >= source.samples) fail(ErrorCode::kDimension, "window row out of range");
    for (std::size_t i = 0; i < source.variables; ++i) {
      for (std::size_t k = 0; k < source.lags; ++k) {
        w.windows[i](s, k) = source.windows[i](from, k);
      }
      w.targets(s, i) = source.targets(from, i);
    }
    w.replicate.push_back(source.replicate[from]);
    w.time.push_back(source.time[from]);
  }
  return w;
}

}  // namespace navar
