#include "navar/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <tuple>

#include "navar/error.hpp"
#include "navar/io_util.hpp"

namespace navar {

using namespace numerics;

namespace {

constexpr std::size_t kEvalBatch = 2048;

TimeSeriesDataset to_model_space(const NavarModel& model, const TimeSeriesDataset& dataset) {
  dataset.validate();
  if (dataset.variables() != model.variables()) {
    fail(ErrorCode::kDimension, "model has " + std::to_string(model.variables()) +
                                    " variables but data has " +
                                    std::to_string(dataset.variables()));
  }
  if (model.normalization().mean.empty()) return dataset;
  return apply_normalization(dataset, model.normalization());
}

double population_sigma(std::span<const double> values) {
  const double first = values.front();
  if (std::all_of(values.begin(), values.end(), [first](double v) { return v == first; })) {
    return 0.0;
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size()));
}

ContributionTensor window_contributions(const NavarModel& model,
                                        const TimeSeriesDataset& normalized) {
  const std::size_t n = model.variables();
  const WindowedDataset all = make_windows(normalized, model.config().lags);
  ContributionTensor out;
  out.variables = n;
  out.steps = all.samples;
  out.first_step = model.config().lags;
  out.values.assign(all.samples * n * n, 0.0);
  out.replicate = all.replicate;
  out.time = all.time;
  std::vector<std::size_t> rows(all.samples);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  for (std::size_t begin = 0; begin < all.samples; begin += kEvalBatch) {
    const std::size_t end = std::min(begin + kEvalBatch, all.samples);
    const WindowedDataset batch =
        gather_windows(all, std::span<const std::size_t>(rows).subspan(begin, end - begin));
    Graph graph;
    const BoundModel bound = bind_model(graph, model, false);
    const BatchForward fwd = forward_contributions(model, bound, graph, batch);
    for (std::size_t i = 0; i < n; ++i) {
      const Tensor& c = fwd.contributions[i].value();
      for (std::size_t b = 0; b < batch.samples; ++b) {
        for (std::size_t j = 0; j < n; ++j) out.at(begin + b, i, j) = c(b, j);
      }
    }
  }
  return out;
}

ContributionTensor sequence_contributions(const NavarModel& model,
                                          const TimeSeriesDataset& normalized) {
  const std::size_t n = model.variables();
  const std::vector<SequenceChunk> chunks = make_chunks(normalized, model.config().lags);
  const SequenceBatch batch = make_sequence_batch(normalized, chunks, TargetMask::kAll);
  Graph graph;
  const BoundModel bound = bind_model(graph, model, false);
  const SequenceForward fwd = forward_sequences(model, bound, graph, batch);

  struct Row {
    std::size_t replicate, time, step, column;
  };
  std::vector<Row> rows;
  for (std::size_t s = 0; s < batch.steps; ++s) {
    for (std::size_t b = 0; b < batch.batch; ++b) {
      if (batch.mask[s](b, 0) != 0.0) rows.push_back({batch.replicate[s][b], batch.time[s][b], s, b});
    }
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::tie(a.replicate, a.time) < std::tie(b.replicate, b.time);
  });

  ContributionTensor out;
  out.variables = n;
  out.steps = rows.size();
  out.first_step = 1;
  out.values.assign(rows.size() * n * n, 0.0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.replicate.push_back(rows[r].replicate);
    out.time.push_back(rows[r].time);
    for (std::size_t i = 0; i < n; ++i) {
      const Tensor& c = fwd.contributions[rows[r].step][i].value();
      for (std::size_t j = 0; j < n; ++j) out.at(r, i, j) = c(rows[r].column, j);
    }
  }
  return out;
}

}  // namespace

ContributionTensor extract_contributions(const NavarModel& model,
                                         const TimeSeriesDataset& dataset) {
  const TimeSeriesDataset normalized = to_model_space(model, dataset);
  ContributionTensor out = model.config().backbone == BackboneKind::kMlp
                               ? window_contributions(model, normalized)
                               : sequence_contributions(model, normalized);
  out.beta = model.beta().storage();
  return out;
}

std::vector<double> predictions_from_contributions(const ContributionTensor& contribs) {
  const std::size_t n = contribs.variables;
  std::vector<double> out(contribs.steps * n);
  for (std::size_t r = 0; r < contribs.steps; ++r) {
    for (std::size_t j = 0; j < n; ++j) {
      double total = contribs.at(r, 0, j);
      for (std::size_t i = 1; i < n; ++i) total += contribs.at(r, i, j);
      out[r * n + j] = total + contribs.beta[j];
    }
  }
  return out;
}

std::vector<double> ablated_predictions(const ContributionTensor& contribs,
                                        std::size_t excluded) {
  const std::size_t n = contribs.variables;
  if (excluded >= n) fail(ErrorCode::kDimension, "excluded variable out of range");
  if (contribs.steps == 0) fail(ErrorCode::kDimension, "empty contribution tensor");
  std::vector<double> means(n, 0.0);
  for (std::size_t r = 0; r < contribs.steps; ++r) {
    for (std::size_t j = 0; j < n; ++j) means[j] += contribs.at(r, excluded, j);
  }
  for (double& m : means) m /= static_cast<double>(contribs.steps);
  ContributionTensor replaced = contribs;
  for (std::size_t r = 0; r < contribs.steps; ++r) {
    for (std::size_t j = 0; j < n; ++j) replaced.at(r, excluded, j) = means[j];
  }
  return predictions_from_contributions(replaced);
}

ScoreMatrix score_links(const ContributionTensor& contribs) {
  if (contribs.steps < 2) {
    fail(ErrorCode::kDatasetTooShort, "scoring needs at least 2 time steps, got " +
                                          std::to_string(contribs.steps));
  }
  const std::size_t n = contribs.variables;
  ScoreMatrix out;
  out.variables = n;
  out.scores.assign(n * n, 0.0);
  std::vector<double> series(contribs.steps);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t r = 0; r < contribs.steps; ++r) series[r] = contribs.at(r, i, j);
      out.at(i, j) = population_sigma(series);
    }
  }
  return out;
}

RocCurve auroc(const ScoreMatrix& scores, const GroundTruthGraph& truth,
               bool ignore_self_links) {
  const std::size_t n = scores.variables;
  if (truth.variables != n) {
    fail(ErrorCode::kDimension, "score matrix is " + std::to_string(n) + "x" +
                                    std::to_string(n) + " but truth is " +
                                    std::to_string(truth.variables) + "x" +
                                    std::to_string(truth.variables));
  }
  struct Item {
    double score;
    bool positive;
  };
  std::vector<Item> items;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (ignore_self_links && i == j) continue;
      items.push_back({scores.at(i, j), truth.link(i, j)});
    }
  }
  RocCurve curve;
  for (const Item& it : items) (it.positive ? curve.positives : curve.negatives) += 1;
  if (curve.positives == 0 || curve.negatives == 0) {
    fail(ErrorCode::kUndefinedAuroc, "AUROC needs at least one true and one false link, got " +
                                         std::to_string(curve.positives) + " and " +
                                         std::to_string(curve.negatives));
  }

  // Rank statistic with mid-ranks for ties.
  std::sort(items.begin(), items.end(),
            [](const Item& a, const Item& b) { return a.score < b.score; });
  double positive_rank_sum = 0.0;
  for (std::size_t begin = 0; begin < items.size();) {
    std::size_t end = begin;
    while (end < items.size() && items[end].score == items[begin].score) ++end;
    const double mid_rank = 0.5 * static_cast<double>(begin + 1 + end);
    for (std::size_t k = begin; k < end; ++k) {
      if (items[k].positive) positive_rank_sum += mid_rank;
    }
    begin = end;
  }
  const double p = static_cast<double>(curve.positives);
  const double q = static_cast<double>(curve.negatives);
  curve.auroc = (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * q);

  curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::size_t tp = 0, fp = 0;
  for (std::size_t end = items.size(); end > 0;) {
    const double threshold = items[end - 1].score;
    while (end > 0 && items[end - 1].score == threshold) {
      (items[end - 1].positive ? tp : fp) += 1;
      --end;
    }
    curve.points.push_back({static_cast<double>(fp) / q, static_cast<double>(tp) / p, threshold});
  }
  return curve;
}

double trapezoid_area(const RocCurve& curve) {
  double area = 0.0;
  for (std::size_t k = 1; k < curve.points.size(); ++k) {
    const RocPoint& a = curve.points[k - 1];
    const RocPoint& b = curve.points[k];
    area += (b.false_positive_rate - a.false_positive_rate) *
            (a.true_positive_rate + b.true_positive_rate) / 2.0;
  }
  return area;
}

std::vector<RankedLink> rank_links(const ScoreMatrix& scores, bool include_self_links) {
  std::vector<RankedLink> links;
  for (std::size_t i = 0; i < scores.variables; ++i) {
    for (std::size_t j = 0; j < scores.variables; ++j) {
      if (!include_self_links && i == j) continue;
      links.push_back({i, j, scores.at(i, j)});
    }
  }
  std::sort(links.begin(), links.end(), [](const RankedLink& a, const RankedLink& b) {
    if (a.score != b.score) return a.score > b.score;
    return std::tie(a.cause, a.effect) < std::tie(b.cause, b.effect);
  });
  return links;
}

LagAnalysis lag_mask_analysis(const NavarModel& model, const TimeSeriesDataset& dataset,
                              std::size_t cause, std::size_t effect) {
  if (model.config().backbone != BackboneKind::kMlp) {
    fail(ErrorCode::kUnsupported,
         "lag masking needs explicit lag inputs; the lstm backbone is not supported");
  }
  const std::size_t n = model.variables();
  if (cause >= n || effect >= n) {
    fail(ErrorCode::kDimension, "pair (" + std::to_string(cause) + ", " +
                                    std::to_string(effect) + ") out of range for N = " +
                                    std::to_string(n));
  }
  const TimeSeriesDataset normalized = to_model_space(model, dataset);
  const std::size_t lags = model.config().lags;
  const WindowedDataset all = make_windows(normalized, lags);
  const auto& net = std::get<MlpBackbone>(model.backbones()[cause]);

  std::vector<double> target(all.samples);
  for (std::size_t r = 0; r < all.samples; ++r) target[r] = all.targets(r, effect);

  auto evaluate = [&](std::size_t cutoff) {
    Tensor windows = all.windows[cause];
    for (std::size_t r = 0; r < all.samples; ++r) {
      for (std::size_t k = cutoff; k < lags; ++k) windows(r, k) = 0.0;
    }
    Graph graph;
    std::vector<Var> bound;
    for (const Tensor* p : net.parameters()) bound.push_back(graph.input(*p));
    const Tensor& out = net.forward(bound, graph.input(std::move(windows))).value();
    std::vector<double> c(all.samples);
    double mse = 0.0;
    for (std::size_t r = 0; r < all.samples; ++r) {
      c[r] = out(r, effect);
      mse += (c[r] - target[r]) * (c[r] - target[r]);
    }
    return std::pair{population_sigma(c), mse / static_cast<double>(all.samples)};
  };

  LagAnalysis result;
  result.cause = cause;
  result.effect = effect;
  std::tie(result.baseline_score, result.baseline_mse) = evaluate(0);
  double previous = result.baseline_score;
  for (std::size_t k = 1; k <= lags; ++k) {
    const auto [score, mse] = evaluate(k);
    result.records.push_back({k, score, mse, score - previous});
    previous = score;
  }
  return result;
}

void save_scores_csv(const ScoreMatrix& scores, const std::string& path,
                     std::span<const std::string> names) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write '" + path + "'");
  if (!names.empty()) {
    for (std::size_t i = 0; i < names.size(); ++i) out << (i ? "," : "") << names[i];
    out << '\n';
  }
  for (std::size_t i = 0; i < scores.variables; ++i) {
    for (std::size_t j = 0; j < scores.variables; ++j) {
      out << (j ? "," : "") << format_double(scores.at(i, j));
    }
    out << '\n';
  }
  if (!out) fail(ErrorCode::kIo, "failed writing '" + path + "'");
}

ScoreMatrix load_scores_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      if (!parse_double(trim(cell), v)) {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    if (!numeric) {
      if (rows.empty() && line_no == 1) continue;  // header
      fail(ErrorCode::kParse, path + ": non-numeric score at line " + std::to_string(line_no));
    }
    rows.push_back(std::move(row));
  }
  ScoreMatrix m;
  m.variables = rows.size();
  if (m.variables == 0) fail(ErrorCode::kParse, path + ": empty score matrix");
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.variables) {
      fail(ErrorCode::kParse, path + ": score matrix row " + std::to_string(r + 1) +
                                  " has " + std::to_string(rows[r].size()) + " entries, expected " +
                                  std::to_string(m.variables));
    }
    for (double v : rows[r]) {
      if (v < 0.0) fail(ErrorCode::kParse, path + ": negative score in row " + std::to_string(r + 1));
      m.scores.push_back(v);
    }
  }
  return m;
}

void save_roc_csv(const RocCurve& curve, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write '" + path + "'");
  out << "fpr,tpr,threshold\n";
  for (const RocPoint& p : curve.points) {
    out << format_double(p.false_positive_rate) << ',' << format_double(p.true_positive_rate)
        << ',' << (std::isinf(p.threshold) ? std::string("inf") : format_double(p.threshold))
        << '\n';
  }
  if (!out) fail(ErrorCode::kIo, "failed writing '" + path + "'");
}

void save_lags_csv(const LagAnalysis& analysis, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write '" + path + "'");
  out << "k,score,mse,delta_score\n";
  for (const LagRecord& r : analysis.records) {
    out << r.lag << ',' << format_double(r.score) << ',' << format_double(r.mse) << ','
        << format_double(r.delta_score) << '\n';
  }
  if (!out) fail(ErrorCode::kIo, "failed writing '" + path + "'");
}

}  // namespace navar
