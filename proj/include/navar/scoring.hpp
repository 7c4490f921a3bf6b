#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "navar/data.hpp"
#include "navar/model.hpp"

namespace navar {

/// Contribution history c_t^{i->j}, rows ordered by (replicate, t). Values are
/// in the model's normalized space.
struct ContributionTensor {
  std::size_t variables = 0;
  std::size_t steps = 0;
  /// First scored step of every replicate, 0-based: K for the MLP, 1 for the
  /// LSTM.
  std::size_t first_step = 0;
  std::vector<double> values;  // steps x N x N
  std::vector<double> beta;
  std::vector<std::size_t> replicate;
  std::vector<std::size_t> time;

  double at(std::size_t row, std::size_t cause, std::size_t effect) const {
    return values[(row * variables + cause) * variables + effect];
  }
  double& at(std::size_t row, std::size_t cause, std::size_t effect) {
    return values[(row * variables + cause) * variables + effect];
  }
};

/// Normalizes `dataset` (raw scale) with the model's stored stats and
/// evaluates every valid step.
ContributionTensor extract_contributions(const NavarModel& model,
                                         const TimeSeriesDataset& dataset);

/// beta_j + sum_i c^{i->j}, summed in ascending i, for every row: steps x N.
std::vector<double> predictions_from_contributions(const ContributionTensor& contribs);

/// Prediction with cause `excluded` dropped: its contribution is replaced by
/// its mean over the rows, so no refit is needed.
std::vector<double> ablated_predictions(const ContributionTensor& contribs,
                                        std::size_t excluded);

struct ScoreMatrix {
  std::size_t variables = 0;
  std::vector<double> scores;  // (cause, effect) row-major
  /// Diagonal entries are kept but marked as self-links.
  bool self_links_flagged = true;

  double at(std::size_t cause, std::size_t effect) const {
    return scores[cause * variables + effect];
  }
  double& at(std::size_t cause, std::size_t effect) { return scores[cause * variables + effect]; }
};

/// Population standard deviation of each pair's contribution history; exactly
/// zero iff the history is constant.
ScoreMatrix score_links(const ContributionTensor& contribs);

struct RocPoint {
  double false_positive_rate;
  double true_positive_rate;
  double threshold;
};

struct RocCurve {
  std::vector<RocPoint> points;
  double auroc = 0.0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

/// Mann-Whitney AUROC (ties count 1/2) plus one ROC point per distinct
/// threshold, from (0, 0) at +inf down to (1, 1).
RocCurve auroc(const ScoreMatrix& scores, const GroundTruthGraph& truth,
               bool ignore_self_links = true);

/// Trapezoidal area under the curve's points.
double trapezoid_area(const RocCurve& curve);

struct RankedLink {
  std::size_t cause;
  std::size_t effect;
  double score;
};

/// Descending score; ties by (cause, effect).
std::vector<RankedLink> rank_links(const ScoreMatrix& scores, bool include_self_links = true);

struct LagRecord {
  std::size_t lag;
  double score;
  double mse;
  double delta_score;
};

struct LagAnalysis {
  std::size_t cause = 0;
  std::size_t effect = 0;
  /// Fully masked input (k = 0).
  double baseline_score = 0.0;
  double baseline_mse = 0.0;
  std::vector<LagRecord> records;  // k = 1 .. K
};

/// Masks the cause's inputs at lags > k with 0 (the normalized mean) for each
/// cutoff k, then scores pair (cause, effect). mse_k is the mean of
/// (c^{cause->effect} - x^{effect})^2 in normalized space.
LagAnalysis lag_mask_analysis(const NavarModel& model, const TimeSeriesDataset& dataset,
                              std::size_t cause, std::size_t effect);

void save_scores_csv(const ScoreMatrix& scores, const std::string& path,
                     std::span<const std::string> names = {});
ScoreMatrix load_scores_csv(const std::string& path);
void save_roc_csv(const RocCurve& curve, const std::string& path);
void save_lags_csv(const LagAnalysis& analysis, const std::string& path);

}  // namespace navar
