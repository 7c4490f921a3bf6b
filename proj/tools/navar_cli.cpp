// Command-line front end over the C API.
//   navar generate | train | score | eval | lags | bench | preset
// Exit codes: 0 success, 1 runtime failure, 2 usage error.
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "navar/navar.h"

namespace {

struct RuntimeFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(navar_status status) {
  if (status != NAVAR_OK) throw RuntimeFailure(navar_last_error());
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};

using Config = std::unique_ptr<navar_config, Deleter<navar_config, navar_config_free>>;
using Dataset = std::unique_ptr<navar_dataset, Deleter<navar_dataset, navar_dataset_free>>;
using Truth = std::unique_ptr<navar_truth, Deleter<navar_truth, navar_truth_free>>;
using Model = std::unique_ptr<navar_model, Deleter<navar_model, navar_model_free>>;
using Report = std::unique_ptr<navar_report, Deleter<navar_report, navar_report_free>>;
using Scores = std::unique_ptr<navar_scores, Deleter<navar_scores, navar_scores_free>>;
using Roc = std::unique_ptr<navar_roc, Deleter<navar_roc, navar_roc_free>>;
using Lags = std::unique_ptr<navar_lags, Deleter<navar_lags, navar_lags_free>>;

std::string format17(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string default_truth_path(const std::string& out) {
  const auto dot = out.rfind('.');
  const auto slash = out.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
    return out + ".truth.csv";
  }
  return out.substr(0, dot) + ".truth" + out.substr(dot);
}

struct DataOptions {
  std::string path;
  bool no_header = false;
  char delimiter = ',';

  void add(CLI::App* cmd) {
    cmd->add_option("--data", path, "Input CSV, one column per variable")->required();
    cmd->add_flag("--no-header", no_header, "First row holds values, not names");
    cmd->add_option("--delimiter", delimiter, "Field separator");
  }
  Dataset load() const {
    navar_dataset* ds = nullptr;
    check(navar_dataset_load_csv(path.c_str(), no_header ? 0 : 1, delimiter, &ds));
    return Dataset(ds);
  }
};

struct ConfigOptions {
  std::string preset;
  std::string file;
  std::vector<std::string> overrides;

  void add(CLI::App* cmd) {
    auto* p = cmd->add_option("--preset", preset, "Shipped hyperparameter preset");
    cmd->add_option("--config", file, "key=value config file")->excludes(p);
    cmd->add_option("--set", overrides, "Override one field, key=value")->take_all();
  }
  // Config errors here are usage errors.
  static void apply(navar_status status) {
    if (status == NAVAR_ERR_CONFIG) throw CLI::ValidationError(navar_last_error());
    check(status);
  }

  // Preset or file first, then every --set in order. Without either, the
  // fields in `defaults` are applied to the library defaults.
  Config build(const std::vector<std::pair<std::string, std::string>>& defaults = {}) const {
    navar_config* raw = nullptr;
    if (!preset.empty()) {
      apply(navar_config_from_preset(preset.c_str(), &raw));
    } else {
      apply(navar_config_create(&raw));
    }
    Config cfg(raw);
    if (preset.empty() && file.empty()) {
      for (const auto& [k, v] : defaults) apply(navar_config_set(cfg.get(), k.c_str(), v.c_str()));
    }
    if (!file.empty()) apply(navar_config_load(cfg.get(), file.c_str()));
    for (const auto& entry : overrides) {
      const auto eq = entry.find('=');
      if (eq == std::string::npos) {
        throw CLI::ValidationError("--set", "expected key=value, got '" + entry + "'");
      }
      apply(navar_config_set(cfg.get(), entry.substr(0, eq).c_str(), entry.substr(eq + 1).c_str()));
    }
    return cfg;
  }
};

struct GenerateOptions {
  std::string scm = "toy3";
  std::size_t steps = 0;  // 0 picks the generator default
  std::size_t variables = 5;
  std::size_t lags = 2;
  double density = 0.3;
  double coeff_scale = 1.0;
  std::size_t replicates = 1;

  void add(CLI::App* cmd, bool with_shape) {
    cmd->add_option("--scm", scm, "Generator")
        ->check(CLI::IsMember({"toy3", "lag2", "linear-var"}))
        ->capture_default_str();
    cmd->add_option("--T", steps, "Time steps (default 4000 for toy3/lag2, 1000 for linear-var)");
    if (!with_shape) return;
    cmd->add_option("--N", variables, "linear-var: number of variables")->capture_default_str();
    cmd->add_option("--K", lags, "linear-var: VAR order")->capture_default_str();
    cmd->add_option("--density", density, "linear-var: link probability")->capture_default_str();
    cmd->add_option("--coeff-scale", coeff_scale, "linear-var: coefficient magnitude")
        ->capture_default_str();
    cmd->add_option("--replicates", replicates, "linear-var: independent series")
        ->capture_default_str();
  }
  Dataset generate(std::uint64_t seed) const {
    navar_dataset* ds = nullptr;
    if (scm == "toy3") {
      check(navar_generate_toy3(steps ? steps : 4000, seed, &ds));
    } else if (scm == "lag2") {
      check(navar_generate_lag_scm(steps ? steps : 4000, seed, &ds));
    } else {
      check(navar_generate_linear_var(variables, steps ? steps : 1000, lags, density, coeff_scale,
                                      seed, replicates, &ds));
    }
    return Dataset(ds);
  }
};

// Name match first, then a 0-based index.
std::size_t resolve_variable(const navar_dataset* ds, const std::string& token) {
  const std::size_t n = navar_dataset_variables(ds);
  for (std::size_t i = 0; i < n; ++i) {
    const char* name = navar_dataset_variable_name(ds, i);
    if (name != nullptr && token == name) return i;
  }
  std::size_t pos = 0;
  unsigned long index = 0;
  try {
    index = std::stoul(token, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != token.size() || token.empty()) {
    throw RuntimeFailure("unknown variable '" + token + "'");
  }
  if (index >= n) {
    throw RuntimeFailure("variable index " + token + " out of range for N = " +
                         std::to_string(n));
  }
  return index;
}

void write_report(const std::string& path, const navar_config* cfg, const navar_report* report) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write '" + path + "'");
  std::string config = navar_config_describe(cfg);
  std::size_t start = 0;
  while (start < config.size()) {
    auto end = config.find('\n', start);
    if (end == std::string::npos) end = config.size();
    if (end > start) out << "# " << config.substr(start, end - start) << '\n';
    start = end + 1;
  }
  out << "epoch,train_loss,val_mse\n";
  const bool has_val = navar_report_has_validation(report) != 0;
  for (std::size_t e = 0; e < navar_report_epochs(report); ++e) {
    double loss = 0.0;
    double val = 0.0;
    check(navar_report_epoch(report, e, &loss, &val));
    out << e + 1 << ',' << format17(loss) << ',' << (has_val ? format17(val) : "") << '\n';
  }
  if (!out) throw RuntimeFailure("failed writing '" + path + "'");
}

double trial_auroc(const GenerateOptions& gen, const navar_config* cfg, std::uint64_t seed) {
  Dataset ds = gen.generate(seed);
  navar_model* model = nullptr;
  check(navar_train(ds.get(), cfg, &model, nullptr));
  Model m(model);
  navar_scores* scores = nullptr;
  check(navar_score(m.get(), ds.get(), &scores));
  Scores s(scores);
  navar_truth* truth = nullptr;
  check(navar_dataset_truth(ds.get(), &truth));
  Truth t(truth);
  navar_roc* roc = nullptr;
  check(navar_auroc(s.get(), t.get(), 1, &roc));
  Roc r(roc);
  return navar_roc_auroc(r.get());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural additive vector autoregression for Granger-causal discovery"};
  app.require_subcommand(1);
  app.set_version_flag("--version", navar_version());

  // generate
  auto* generate = app.add_subcommand("generate", "Simulate a dataset with known ground truth");
  GenerateOptions gen;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  std::string gen_truth;
  gen.add(generate, true);
  generate->add_option("--seed", gen_seed, "RNG seed")->capture_default_str();
  generate->add_option("--out", gen_out, "Data CSV path")->required();
  generate->add_option("--truth", gen_truth, "Truth CSV path (default <out>.truth.csv)");

  // train
  auto* train = app.add_subcommand("train", "Fit a model and write a checkpoint");
  DataOptions train_data;
  ConfigOptions train_cfg;
  std::string train_model;
  std::string train_report;
  train_data.add(train);
  train_cfg.add(train);
  train->add_option("--out-model", train_model, "Checkpoint path")->required();
  train->add_option("--report", train_report, "Per-epoch loss CSV");

  // score
  auto* score = app.add_subcommand("score", "Causal score matrix from a trained model");
  DataOptions score_data;
  std::string score_model;
  std::string score_out;
  score_data.add(score);
  score->add_option("--model", score_model, "Checkpoint path")->required();
  score->add_option("--out-scores", score_out, "N x N score CSV")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "AUROC of a score matrix against a truth matrix");
  std::string eval_scores;
  std::string eval_truth;
  std::string eval_roc;
  bool ignore_self = true;
  eval->add_option("--scores", eval_scores, "Score CSV")->required();
  eval->add_option("--truth", eval_truth, "Truth CSV")->required();
  eval->add_flag("--ignore-self-links,!--include-self-links", ignore_self,
                 "Leave the diagonal out of the evaluation (default true)");
  eval->add_option("--out-roc", eval_roc, "ROC points CSV");

  // lags
  auto* lags = app.add_subcommand("lags", "Lag-masking analysis for one pair");
  DataOptions lags_data;
  std::string lags_model;
  std::string lags_pair;
  std::string lags_out;
  lags_data.add(lags);
  lags->add_option("--model", lags_model, "Checkpoint path (MLP backbone)")->required();
  lags->add_option("--pair", lags_pair, "cause,effect as names or 0-based indices")->required();
  lags->add_option("--out", lags_out, "Per-lag CSV")->required();

  // bench
  auto* bench = app.add_subcommand("bench", "generate -> train -> score -> eval over seeds");
  GenerateOptions bench_gen;
  ConfigOptions bench_cfg;
  std::size_t trials = 5;
  std::uint64_t seed_base = 0;
  bench_gen.add(bench, true);
  bench_cfg.add(bench);
  bench->add_option("--trials", trials, "Number of seeds")->capture_default_str();
  bench->add_option("--seed-base", seed_base, "Seed of the first trial")->capture_default_str();

  // preset
  auto* preset = app.add_subcommand("preset", "List or show shipped presets");
  bool preset_list = false;
  std::string preset_show;
  auto* list_flag = preset->add_flag("--list", preset_list, "List preset names");
  preset->add_option("--show", preset_show, "Print one preset as key=value")->excludes(list_flag);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (generate->parsed()) {
      Dataset ds = gen.generate(gen_seed);
      check(navar_dataset_save_csv(ds.get(), gen_out.c_str()));
      navar_truth* truth = nullptr;
      check(navar_dataset_truth(ds.get(), &truth));
      Truth t(truth);
      const std::string truth_path = gen_truth.empty() ? default_truth_path(gen_out) : gen_truth;
      check(navar_truth_save_csv(t.get(), truth_path.c_str()));
    } else if (train->parsed()) {
      Config cfg = train_cfg.build();
      Dataset ds = train_data.load();
      navar_model* model = nullptr;
      navar_report* report = nullptr;
      check(navar_train(ds.get(), cfg.get(), &model, &report));
      Model m(model);
      Report r(report);
      check(navar_model_save(m.get(), train_model.c_str()));
      if (!train_report.empty()) write_report(train_report, cfg.get(), r.get());
      std::printf("trained %zu epochs in %.2fs\n", navar_report_epochs(r.get()),
                  navar_report_seconds(r.get()));
    } else if (score->parsed()) {
      navar_model* model = nullptr;
      check(navar_model_load(score_model.c_str(), &model));
      Model m(model);
      Dataset ds = score_data.load();
      navar_scores* scores = nullptr;
      check(navar_score(m.get(), ds.get(), &scores));
      Scores s(scores);
      check(navar_scores_save_csv(s.get(), score_out.c_str(), ds.get()));
    } else if (eval->parsed()) {
      navar_scores* scores = nullptr;
      check(navar_scores_load_csv(eval_scores.c_str(), &scores));
      Scores s(scores);
      navar_truth* truth = nullptr;
      check(navar_truth_load_csv(eval_truth.c_str(), &truth));
      Truth t(truth);
      navar_roc* roc = nullptr;
      check(navar_auroc(s.get(), t.get(), ignore_self ? 1 : 0, &roc));
      Roc r(roc);
      if (!eval_roc.empty()) check(navar_roc_save_csv(r.get(), eval_roc.c_str()));
      std::printf("%.6f\n", navar_roc_auroc(r.get()));
    } else if (lags->parsed()) {
      const auto comma = lags_pair.find(',');
      if (comma == std::string::npos) {
        std::fprintf(stderr, "--pair: expected cause,effect\n");
        return 2;
      }
      navar_model* model = nullptr;
      check(navar_model_load(lags_model.c_str(), &model));
      Model m(model);
      Dataset ds = lags_data.load();
      const std::size_t cause = resolve_variable(ds.get(), lags_pair.substr(0, comma));
      const std::size_t effect = resolve_variable(ds.get(), lags_pair.substr(comma + 1));
      navar_lags* analysis = nullptr;
      check(navar_lag_analysis(m.get(), ds.get(), cause, effect, &analysis));
      Lags l(analysis);
      check(navar_lags_save_csv(l.get(), lags_out.c_str()));
    } else if (bench->parsed()) {
      Config cfg = bench_cfg.build({{"K", "2"},
                                    {"hidden_units", "16"},
                                    {"lambda", "0.1"},
                                    {"mu", "1e-4"},
                                    {"epochs", "2000"}});
      std::vector<double> values;
      std::size_t failures = 0;
      for (std::size_t t = 0; t < trials; ++t) {
        const std::uint64_t seed = seed_base + t;
        check(navar_config_set(cfg.get(), "seed", std::to_string(seed).c_str()));
        try {
          const double a = trial_auroc(bench_gen, cfg.get(), seed);
          values.push_back(a);
          std::printf("trial seed=%llu auroc=%.6f\n", static_cast<unsigned long long>(seed), a);
        } catch (const RuntimeFailure& e) {
          ++failures;
          std::fprintf(stderr, "trial seed=%llu failed: %s\n",
                       static_cast<unsigned long long>(seed), e.what());
        }
      }
      double mean = 0.0;
      for (double v : values) mean += v;
      if (!values.empty()) mean /= static_cast<double>(values.size());
      double var = 0.0;
      for (double v : values) var += (v - mean) * (v - mean);
      if (!values.empty()) var /= static_cast<double>(values.size());
      std::printf("AUROC mean=%.6f std=%.6f trials=%zu\n", mean, std::sqrt(var), values.size());
      std::printf("failures=%zu\n", failures);
      if (values.empty() && trials > 0) return 1;
    } else if (preset->parsed()) {
      if (!preset_show.empty()) {
        navar_config* raw = nullptr;
        ConfigOptions::apply(navar_config_from_preset(preset_show.c_str(), &raw));
        Config cfg(raw);
        std::fputs(navar_config_describe(cfg.get()), stdout);
      } else {
        for (std::size_t i = 0; i < navar_preset_count(); ++i) {
          std::printf("%-24s %s\n", navar_preset_name(i), navar_preset_description(i));
        }
      }
    }
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "navar: %s\n", e.what());
    return 2;
  } catch (const RuntimeFailure& e) {
    std::fprintf(stderr, "navar: error: %s\n", e.what());
    return 1;
  }
  return 0;
}
