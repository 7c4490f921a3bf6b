// Acceptance checks. Run with one criterion id (1..9) or "all"; each prints
// one PASS/FAIL line and the exit status is nonzero if any check failed.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "navar/config.hpp"
#include "navar/data.hpp"
#include "navar/error.hpp"
#include "navar/model.hpp"
#include "navar/scoring.hpp"
#include "../test_support.hpp"

using namespace navar;
using navar::testing::check_gradients;
using navar::testing::random_tensor;
using navar::testing::read_file;
using navar::testing::TempDir;

namespace {

// Tolerances and budgets.
constexpr double kGradientTolerance = 1e-4;
constexpr double kGradientStep = 1e-5;
constexpr double kAurocOracleTolerance = 1e-12;
constexpr double kToyAurocFloor = 0.95;
constexpr double kVarAurocFloor = 0.85;
constexpr double kSuppressedCeiling = 0.05;
constexpr double kUnpenalizedFloor = 0.1;
constexpr int kSeeds = 5;
constexpr int kRequiredSeeds = 4;

constexpr double kBudgetGradient = 10.0;
constexpr double kBudgetAdditivity = 5.0;
constexpr double kBudgetToy = 15 * 60.0;
constexpr double kBudgetLags = 20 * 60.0;
constexpr double kBudgetPenalty = 10 * 60.0;
constexpr double kBudgetAuroc = 10.0;
constexpr double kBudgetDream = 2 * 3600.0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

bool report(int id, bool pass, const std::string& detail) {
  std::printf("criterion %d %s: %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  return pass;
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), pattern, a, b, c);
  return buf;
}

BoundModel bound_from(const NavarModel& model, const std::vector<Var>& leaves) {
  BoundModel b;
  std::size_t k = 0;
  for (const Backbone& net : model.backbones()) {
    std::vector<Var> vars;
    for (std::size_t p = 0; p < backbone_parameters(net).size(); ++p) vars.push_back(leaves[k++]);
    b.backbones.push_back(std::move(vars));
  }
  b.beta = leaves[k];
  return b;
}

NavarConfig toy_config(std::uint64_t seed) {
  NavarConfig c;
  c.lags = 2;
  c.hidden_units = 16;
  c.batch_size = 64;
  c.learning_rate = 1e-3;
  c.lambda = 0.1;
  c.mu = 1e-4;
  c.epochs = 2000;
  c.seed = seed;
  return c;
}

ScoreMatrix fit_and_score(const TimeSeriesDataset& ds, const NavarConfig& c) {
  const auto result = train(ds, c);
  return score_links(extract_contributions(result.model, ds));
}

double brute_force_auroc(const ScoreMatrix& s, const GroundTruthGraph& t) {
  double credit = 0.0, pairs = 0.0;
  const std::size_t n = s.variables;
  for (std::size_t a = 0; a < n * n; ++a) {
    if (a / n == a % n || !t.adjacency[a]) continue;
    for (std::size_t b = 0; b < n * n; ++b) {
      if (b / n == b % n || t.adjacency[b]) continue;
      pairs += 1.0;
      if (s.scores[a] > s.scores[b]) credit += 1.0;
      if (s.scores[a] == s.scores[b]) credit += 0.5;
    }
  }
  return credit / pairs;
}

bool gradient_correctness() {
  const auto start = Clock::now();
  NavarConfig c;
  c.lags = 2;
  c.hidden_units = 8;
  c.lambda = 0.3;
  c.seed = 11;
  NavarModel model = NavarModel::initialized(c, 3);
  std::mt19937_64 rng(5);
  model.beta() = random_tensor(1, 3, rng);
  const auto ds = normalize(generate_toy3(40, 2)).dataset;
  const auto windows = make_windows(ds, 2);
  const auto result = check_gradients(
      model.parameters(),
      [&](Graph& g, const std::vector<Var>& p) {
        return compute_loss(model, bound_from(model, p), g, windows);
      },
      kGradientStep);
  const double elapsed = seconds_since(start);
  const bool pass = result.worst < kGradientTolerance && elapsed < kBudgetGradient;
  return report(1, pass,
                fmt("%.0f parameters, worst relative error %.3g (< 1e-4), %.2f s (< 10 s)",
                    static_cast<double>(result.checked), result.worst, elapsed));
}

bool additivity() {
  const auto start = Clock::now();
  std::mt19937_64 rng(17);
  std::size_t mismatches = 0;
  double worst_gap = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    NavarConfig c;
    c.lags = 1 + trial % 4;
    c.hidden_units = 2 + trial % 7;
    c.hidden_layers = 1 + trial % 2;
    c.seed = static_cast<std::uint64_t>(trial);
    const std::size_t n = 1 + trial % 6;
    NavarModel model = NavarModel::initialized(c, n);
    model.beta() = random_tensor(1, n, rng, -3, 3);
    TimeSeriesDataset ds;
    ds.replicates.push_back(random_tensor(c.lags + 12, n, rng, -2, 2));
    const auto windows = make_windows(ds, c.lags);
    Graph g;
    const auto fwd = forward_contributions(model, bind_model(g, model, false), g, windows);
    const Tensor& pred = fwd.predictions.value();
    for (std::size_t b = 0; b < windows.samples; ++b) {
      for (std::size_t j = 0; j < n; ++j) {
        double sum = fwd.contributions[0].value()(b, j);
        for (std::size_t i = 1; i < n; ++i) sum += fwd.contributions[i].value()(b, j);
        // Exact: the prediction is this sum with beta added last.
        if (pred(b, j) != sum + model.beta()(0, j)) ++mismatches;
        worst_gap = std::max(worst_gap, std::abs((pred(b, j) - model.beta()(0, j)) - sum));
      }
    }
  }
  const double elapsed = seconds_since(start);
  const bool pass = mismatches == 0 && elapsed < kBudgetAdditivity;
  return report(2, pass,
                fmt("100 models, %.0f inexact entries, |pred - beta - sum| <= %.3g, %.2f s (< 5 s)",
                    static_cast<double>(mismatches), worst_gap, elapsed));
}

bool top_ranks_are_true(const ScoreMatrix& s, const GroundTruthGraph& truth) {
  const auto ranked = rank_links(s, true);
  const std::size_t links = truth.link_count();
  for (std::size_t k = 0; k < links; ++k) {
    if (!truth.link(ranked[k].cause, ranked[k].effect)) return false;
  }
  return true;
}

bool toy_recovery() {
  const auto start = Clock::now();
  double total = 0.0;
  int ordered = 0;
  std::string per_seed;
  for (int seed = 0; seed < kSeeds; ++seed) {
    const auto ds = generate_toy3(4000, seed);
    const auto s = fit_and_score(ds, toy_config(seed));
    const double a = auroc(s, *ds.truth).auroc;
    total += a;
    const bool top = top_ranks_are_true(s, *ds.truth);
    ordered += top ? 1 : 0;
    per_seed += fmt(" %.4f", a) + (top ? "+" : "-");
  }
  const double mean = total / kSeeds;
  const double elapsed = seconds_since(start);
  const bool pass = mean >= kToyAurocFloor && ordered >= kRequiredSeeds && elapsed <= kBudgetToy;
  return report(3, pass,
                fmt("mean AUROC %.4f (>= 0.95), true links on top in %.0f/5 seeds (>= 4), ", mean,
                    ordered) +
                    fmt("%.0f s (<= 900 s); per seed", elapsed) + per_seed);
}

std::set<std::size_t> top_lags(const LagAnalysis& analysis, std::size_t count) {
  std::vector<LagRecord> records = analysis.records;
  std::stable_sort(records.begin(), records.end(),
                   [](const LagRecord& a, const LagRecord& b) { return a.delta_score > b.delta_score; });
  std::set<std::size_t> out;
  for (std::size_t k = 0; k < count && k < records.size(); ++k) out.insert(records[k].lag);
  return out;
}

std::string lag_list(const std::set<std::size_t>& lags) {
  std::string s = "{";
  for (std::size_t l : lags) s += (s.size() > 1 ? "," : "") + std::to_string(l);
  return s + "}";
}

bool lag_structure() {
  const auto start = Clock::now();
  const std::set<std::size_t> y_to_x{3, 4, 5};
  const std::set<std::size_t> x_to_y{2, 4};
  int good = 0;
  std::string per_seed;
  for (int seed = 0; seed < kSeeds; ++seed) {
    const auto ds = generate_lag_scm(4000, seed);
    NavarConfig c;
    c.lags = 8;
    c.hidden_units = 32;
    c.batch_size = 64;
    c.learning_rate = 1e-3;
    c.lambda = 0.1;
    c.mu = 1e-4;
    c.epochs = 500;
    c.seed = seed;
    const auto model = train(ds, c).model;
    const auto yx = top_lags(lag_mask_analysis(model, ds, 1, 0), 3);
    const auto xy = top_lags(lag_mask_analysis(model, ds, 0, 1), 2);
    const bool ok = yx == y_to_x && xy == x_to_y;
    good += ok ? 1 : 0;
    per_seed += " Y->X" + lag_list(yx) + " X->Y" + lag_list(xy) + (ok ? "+" : "-");
  }
  const double elapsed = seconds_since(start);
  const bool pass = good >= kRequiredSeeds && elapsed <= kBudgetLags;
  return report(4, pass,
                fmt("lag ordering holds in %.0f/5 seeds (>= 4), %.0f s (<= 1200 s);", good,
                    elapsed) +
                    per_seed);
}

bool penalty_behavior() {
  const auto start = Clock::now();
  const auto ds = generate_toy3(4000, 0);
  NavarConfig strong = toy_config(0);
  strong.lambda = 1e3;
  strong.epochs = 500;
  NavarConfig none = strong;
  none.lambda = 0.0;
  const auto suppressed = fit_and_score(ds, strong);
  const auto free_fit = fit_and_score(ds, none);
  double worst_off = 0.0;
  double weakest_true = INFINITY;
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      if (i != j) worst_off = std::max(worst_off, suppressed.at(i, j));
      if (ds.truth->link(i, j)) weakest_true = std::min(weakest_true, free_fit.at(i, j));
    }
  }
  const double elapsed = seconds_since(start);
  const bool pass = worst_off < kSuppressedCeiling && weakest_true > kUnpenalizedFloor &&
                    elapsed <= kBudgetPenalty;
  return report(5, pass,
                fmt("lambda=1e3 max off-diagonal %.4g (< 0.05), lambda=0 min true link %.4f (> 0.1), "
                    "%.0f s (<= 600 s)",
                    worst_off, weakest_true, elapsed));
}

bool auroc_oracle() {
  const auto start = Clock::now();
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> bit(0, 1);
  std::uniform_int_distribution<int> level(0, 9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  int instances = 0;
  while (instances < 1000) {
    const std::size_t n = 2 + instances % 5;
    ScoreMatrix s;
    s.variables = n;
    s.scores.resize(n * n);
    // Half the instances use coarse levels so ties are common.
    const bool coarse = instances % 2 == 0;
    for (double& v : s.scores) v = coarse ? 0.1 * level(rng) : u(rng);
    GroundTruthGraph t = GroundTruthGraph::empty(n);
    for (auto& a : t.adjacency) a = static_cast<std::uint8_t>(bit(rng));
    std::size_t pos = 0, neg = 0;
    for (std::size_t k = 0; k < n * n; ++k) {
      if (k / n == k % n) continue;
      (t.adjacency[k] ? pos : neg) += 1;
    }
    if (pos == 0 || neg == 0) continue;
    worst = std::max(worst, std::abs(auroc(s, t).auroc - brute_force_auroc(s, t)));
    ++instances;
  }
  const double elapsed = seconds_since(start);
  const bool pass = worst <= kAurocOracleTolerance && elapsed < kBudgetAuroc;
  return report(6, pass,
                fmt("1000 instances, N in 2..6, max deviation %.3g (<= 1e-12), %.2f s (< 10 s)",
                    worst, elapsed));
}

bool linear_var() {
  double total = 0.0;
  std::string per_seed;
  for (int seed = 0; seed < kSeeds; ++seed) {
    const auto ds = generate_linear_var(5, 1000, 2, 0.3, 1.0, seed);
    NavarConfig c = toy_config(seed);
    c.epochs = 500;
    const double a = auroc(fit_and_score(ds, c), *ds.truth).auroc;
    total += a;
    per_seed += fmt(" %.4f", a);
  }
  const double mean = total / kSeeds;
  return report(7, mean >= kVarAurocFloor,
                fmt("mean AUROC %.4f (>= 0.85); per seed", mean) + per_seed);
}

bool dream_scale() {
  const auto start = Clock::now();
  TempDir dir("acceptance_dream");
  const auto generated = generate_linear_var(100, 21, 2, 0.02, 1.0, 7, 46);
  std::vector<std::string> paths;
  for (std::size_t r = 0; r < generated.replicates.size(); ++r) {
    TimeSeriesDataset one;
    one.replicates.push_back(generated.replicates[r]);
    one.variable_names = generated.variable_names;
    paths.push_back(dir.file("replicate" + std::to_string(r) + ".csv"));
    save_csv(one, paths.back());
  }
  save_truth_csv(*generated.truth, dir.file("truth.csv"));

  const auto ds = load_csv_replicates(paths);
  const auto truth = load_truth_csv(dir.file("truth.csv"));
  const NavarConfig c = find_preset("dream3-ecoli1").config;
  const auto result = train(ds, c);
  save_checkpoint(result.model, dir.file("model.bin"));
  const auto model = load_checkpoint(dir.file("model.bin"));
  const auto scores = score_links(extract_contributions(model, ds));
  save_scores_csv(scores, dir.file("scores.csv"), ds.variable_names);
  const double a = auroc(load_scores_csv(dir.file("scores.csv")), truth).auroc;
  const double elapsed = seconds_since(start);
  const bool shape = ds.replicates.size() == 46 && ds.variables() == 100 &&
                     ds.replicates.front().rows() == 21;
  const bool pass = shape && std::isfinite(a) && elapsed < kBudgetDream &&
                    result.report.train_loss.size() == c.epochs;
  return report(8, pass,
                fmt("46 x 21 x 100 CSVs, dream3-ecoli1 preset, %.0f epochs, AUROC %.4f, ",
                    static_cast<double>(result.report.train_loss.size()), a) +
                    fmt("%.0f s end-to-end (< 7200 s)", elapsed));
}

bool determinism() {
  TempDir dir("acceptance_det");
  std::vector<std::string> texts;
  for (int run = 0; run < 2; ++run) {
    const auto ds = generate_toy3(4000, 0);
    const auto s = fit_and_score(ds, toy_config(0));
    const auto path = dir.file("scores" + std::to_string(run) + ".csv");
    save_scores_csv(s, path, ds.variable_names);
    texts.push_back(read_file(path));
  }
  const bool pass = !texts[0].empty() && texts[0] == texts[1];
  return report(9, pass,
                std::string("two toy3 runs with seed 0 give ") +
                    (pass ? "byte-identical" : "different") + " score CSVs (" +
                    std::to_string(texts[0].size()) + " bytes)");
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<std::string, std::function<bool()>> criteria{
      {"1", gradient_correctness}, {"2", additivity},   {"3", toy_recovery},
      {"4", lag_structure},        {"5", penalty_behavior}, {"6", auroc_oracle},
      {"7", linear_var},           {"8", dream_scale},  {"9", determinism}};
  std::vector<std::string> picked;
  for (int a = 1; a < argc; ++a) picked.emplace_back(argv[a]);
  if (picked.empty() || (picked.size() == 1 && picked[0] == "all")) {
    picked.clear();
    for (const auto& [id, f] : criteria) picked.push_back(id);
  }
  int failures = 0;
  for (const auto& id : picked) {
    const auto it = criteria.find(id);
    if (it == criteria.end()) {
      std::fprintf(stderr, "unknown criterion '%s'\n", id.c_str());
      return 2;
    }
    try {
      if (!it->second()) ++failures;
    } catch (const Error& e) {
      report(std::stoi(id), false, std::string("error: ") + e.what());
      ++failures;
    }
  }
  return failures == 0 ? 0 : 1;
}
