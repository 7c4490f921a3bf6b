#include "navar/navar.h"

#include <exception>
#include <limits>
#include <new>
#include <string>
#include <utility>
#include <vector>

#include "navar/config.hpp"
#include "navar/data.hpp"
#include "navar/error.hpp"
#include "navar/model.hpp"
#include "navar/scoring.hpp"

struct navar_config {
  navar::NavarConfig value;
  std::string text;
};

struct navar_dataset {
  navar::TimeSeriesDataset value;
};

struct navar_truth {
  navar::GroundTruthGraph value;
  std::vector<std::string> names;
};

struct navar_model {
  navar::NavarModel value;
  std::string text;
};

struct navar_report {
  navar::TrainReport value;
};

struct navar_scores {
  navar::ScoreMatrix value;
};

struct navar_roc {
  navar::RocCurve value;
};

struct navar_lags {
  navar::LagAnalysis value;
};

namespace {

thread_local std::string g_last_error;

navar_status to_status(navar::ErrorCode code) {
  using navar::ErrorCode;
  switch (code) {
    case ErrorCode::kDimension: return NAVAR_ERR_DIMENSION;
    case ErrorCode::kContract: return NAVAR_ERR_CONTRACT;
    case ErrorCode::kConfig: return NAVAR_ERR_CONFIG;
    case ErrorCode::kParse: return NAVAR_ERR_PARSE;
    case ErrorCode::kVersion: return NAVAR_ERR_VERSION;
    case ErrorCode::kDivergence: return NAVAR_ERR_DIVERGENCE;
    case ErrorCode::kDatasetTooShort: return NAVAR_ERR_DATASET_TOO_SHORT;
    case ErrorCode::kConstantVariable: return NAVAR_ERR_CONSTANT_VARIABLE;
    case ErrorCode::kUndefinedAuroc: return NAVAR_ERR_UNDEFINED_AUROC;
    case ErrorCode::kUnsupported: return NAVAR_ERR_UNSUPPORTED;
    case ErrorCode::kIo: return NAVAR_ERR_IO;
    case ErrorCode::kGeneration: return NAVAR_ERR_GENERATION;
  }
  return NAVAR_ERR_INTERNAL;
}

navar_status set_error(navar_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

template <typename F>
navar_status guarded(F&& body) {
  try {
    body();
    return NAVAR_OK;
  } catch (const navar::Error& e) {
    return set_error(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(NAVAR_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(NAVAR_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(NAVAR_ERR_INTERNAL, "unknown failure");
  }
}

navar_status null_argument(const char* what) {
  return set_error(NAVAR_ERR_INVALID_ARGUMENT, std::string(what) + " must not be NULL");
}

#define NAVAR_REQUIRE(ptr) \
  do {                     \
    if ((ptr) == nullptr) return null_argument(#ptr); \
  } while (0)

void make_dataset(navar::TimeSeriesDataset ds, navar_dataset** out) {
  *out = new navar_dataset{std::move(ds)};
}

}  // namespace

extern "C" {

const char* navar_version(void) { return "0.1.0"; }

const char* navar_status_name(navar_status status) {
  switch (status) {
    case NAVAR_OK: return "ok";
    case NAVAR_ERR_INVALID_ARGUMENT: return "invalid argument";
    case NAVAR_ERR_DIMENSION: return "dimension";
    case NAVAR_ERR_CONTRACT: return "contract";
    case NAVAR_ERR_CONFIG: return "config";
    case NAVAR_ERR_PARSE: return "parse";
    case NAVAR_ERR_VERSION: return "version";
    case NAVAR_ERR_DIVERGENCE: return "divergence";
    case NAVAR_ERR_DATASET_TOO_SHORT: return "dataset too short";
    case NAVAR_ERR_CONSTANT_VARIABLE: return "constant variable";
    case NAVAR_ERR_UNDEFINED_AUROC: return "undefined auroc";
    case NAVAR_ERR_UNSUPPORTED: return "unsupported";
    case NAVAR_ERR_IO: return "io";
    case NAVAR_ERR_GENERATION: return "generation";
    case NAVAR_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* navar_last_error(void) { return g_last_error.c_str(); }

// Config

navar_status navar_config_create(navar_config** out) {
  NAVAR_REQUIRE(out);
  return guarded([&] { *out = new navar_config{}; });
}

navar_status navar_config_from_preset(const char* name, navar_config** out) {
  NAVAR_REQUIRE(name);
  NAVAR_REQUIRE(out);
  return guarded([&] { *out = new navar_config{navar::find_preset(name).config, {}}; });
}

navar_status navar_config_load(navar_config* config, const char* path) {
  NAVAR_REQUIRE(config);
  NAVAR_REQUIRE(path);
  return guarded([&] { config->value = navar::load_config_file(path, config->value); });
}

navar_status navar_config_set(navar_config* config, const char* key, const char* value) {
  NAVAR_REQUIRE(config);
  NAVAR_REQUIRE(key);
  NAVAR_REQUIRE(value);
  return guarded([&] {
    navar::NavarConfig next = config->value;
    next.set(key, value);
    next.validate();
    config->value = next;
  });
}

const char* navar_config_describe(const navar_config* config) {
  if (config == nullptr) return "";
  auto* mutable_config = const_cast<navar_config*>(config);
  mutable_config->text = navar::format_config(config->value);
  return mutable_config->text.c_str();
}

void navar_config_free(navar_config* config) { delete config; }

size_t navar_preset_count(void) { return navar::presets().size(); }

const char* navar_preset_name(size_t index) {
  const auto all = navar::presets();
  return index < all.size() ? all[index].name : nullptr;
}

const char* navar_preset_description(size_t index) {
  const auto all = navar::presets();
  return index < all.size() ? all[index].description : nullptr;
}

// Datasets

navar_status navar_generate_toy3(size_t steps, uint64_t seed, navar_dataset** out) {
  NAVAR_REQUIRE(out);
  return guarded([&] { make_dataset(navar::generate_toy3(steps, seed), out); });
}

navar_status navar_generate_lag_scm(size_t steps, uint64_t seed, navar_dataset** out) {
  NAVAR_REQUIRE(out);
  return guarded([&] { make_dataset(navar::generate_lag_scm(steps, seed), out); });
}

navar_status navar_generate_linear_var(size_t variables, size_t steps, size_t lags,
                                       double density, double coeff_scale, uint64_t seed,
                                       size_t replicates, navar_dataset** out) {
  NAVAR_REQUIRE(out);
  return guarded([&] {
    make_dataset(navar::generate_linear_var(variables, steps, lags, density, coeff_scale, seed,
                                            replicates),
                 out);
  });
}

navar_status navar_dataset_load_csv(const char* path, int has_header, char delimiter,
                                    navar_dataset** out) {
  NAVAR_REQUIRE(path);
  NAVAR_REQUIRE(out);
  return guarded([&] {
    navar::CsvOptions options;
    options.has_header = has_header != 0;
    options.delimiter = delimiter;
    make_dataset(navar::load_csv(path, options), out);
  });
}

navar_status navar_dataset_save_csv(const navar_dataset* dataset, const char* path) {
  NAVAR_REQUIRE(dataset);
  NAVAR_REQUIRE(path);
  return guarded([&] { navar::save_csv(dataset->value, path); });
}

size_t navar_dataset_variables(const navar_dataset* dataset) {
  return dataset ? dataset->value.variables() : 0;
}

size_t navar_dataset_replicates(const navar_dataset* dataset) {
  return dataset ? dataset->value.replicates.size() : 0;
}

size_t navar_dataset_steps(const navar_dataset* dataset, size_t replicate) {
  if (dataset == nullptr || replicate >= dataset->value.replicates.size()) return 0;
  return dataset->value.replicates[replicate].rows();
}

const char* navar_dataset_variable_name(const navar_dataset* dataset, size_t index) {
  if (dataset == nullptr || index >= dataset->value.variable_names.size()) return nullptr;
  return dataset->value.variable_names[index].c_str();
}

navar_status navar_dataset_value(const navar_dataset* dataset, size_t replicate, size_t step,
                                 size_t variable, double* out) {
  NAVAR_REQUIRE(dataset);
  NAVAR_REQUIRE(out);
  const auto& reps = dataset->value.replicates;
  if (replicate >= reps.size() || step >= reps[replicate].rows() ||
      variable >= reps[replicate].cols()) {
    return set_error(NAVAR_ERR_DIMENSION, "dataset index out of range");
  }
  *out = reps[replicate](step, variable);
  return NAVAR_OK;
}

navar_status navar_dataset_truth(const navar_dataset* dataset, navar_truth** out) {
  NAVAR_REQUIRE(dataset);
  NAVAR_REQUIRE(out);
  if (!dataset->value.truth) {
    return set_error(NAVAR_ERR_CONTRACT, "dataset has no ground truth");
  }
  return guarded(
      [&] { *out = new navar_truth{*dataset->value.truth, dataset->value.variable_names}; });
}

void navar_dataset_free(navar_dataset* dataset) { delete dataset; }

navar_status navar_truth_load_csv(const char* path, navar_truth** out) {
  NAVAR_REQUIRE(path);
  NAVAR_REQUIRE(out);
  return guarded([&] { *out = new navar_truth{navar::load_truth_csv(path), {}}; });
}

navar_status navar_truth_save_csv(const navar_truth* truth, const char* path) {
  NAVAR_REQUIRE(truth);
  NAVAR_REQUIRE(path);
  return guarded([&] { navar::save_truth_csv(truth->value, path, truth->names); });
}

size_t navar_truth_variables(const navar_truth* truth) {
  return truth ? truth->value.variables : 0;
}

navar_status navar_truth_link(const navar_truth* truth, size_t cause, size_t effect, int* out) {
  NAVAR_REQUIRE(truth);
  NAVAR_REQUIRE(out);
  if (cause >= truth->value.variables || effect >= truth->value.variables) {
    return set_error(NAVAR_ERR_DIMENSION, "truth index out of range");
  }
  *out = truth->value.link(cause, effect) ? 1 : 0;
  return NAVAR_OK;
}

void navar_truth_free(navar_truth* truth) { delete truth; }

// Training

navar_status navar_train(const navar_dataset* dataset, const navar_config* config,
                         navar_model** model, navar_report** report) {
  NAVAR_REQUIRE(dataset);
  NAVAR_REQUIRE(config);
  NAVAR_REQUIRE(model);
  return guarded([&] {
    navar::TrainResult result = navar::train(dataset->value, config->value);
    auto* m = new navar_model{std::move(result.model), {}};
    if (report != nullptr) {
      try {
        *report = new navar_report{std::move(result.report)};
      } catch (...) {
        delete m;
        throw;
      }
    }
    *model = m;
  });
}

size_t navar_report_epochs(const navar_report* report) {
  return report ? report->value.train_loss.size() : 0;
}

navar_status navar_report_epoch(const navar_report* report, size_t epoch, double* train_loss,
                                double* val_mse) {
  NAVAR_REQUIRE(report);
  if (epoch >= report->value.train_loss.size()) {
    return set_error(NAVAR_ERR_DIMENSION, "epoch out of range");
  }
  if (train_loss) *train_loss = report->value.train_loss[epoch];
  if (val_mse) {
    const auto& v = report->value.val_mse;
    *val_mse = epoch < v.size() ? v[epoch] : std::numeric_limits<double>::quiet_NaN();
  }
  return NAVAR_OK;
}

int navar_report_has_validation(const navar_report* report) {
  return report && !report->value.val_mse.empty() ? 1 : 0;
}

double navar_report_seconds(const navar_report* report) {
  return report ? report->value.seconds : 0.0;
}

void navar_report_free(navar_report* report) { delete report; }

navar_status navar_model_save(const navar_model* model, const char* path) {
  NAVAR_REQUIRE(model);
  NAVAR_REQUIRE(path);
  return guarded([&] { navar::save_checkpoint(model->value, path); });
}

navar_status navar_model_load(const char* path, navar_model** out) {
  NAVAR_REQUIRE(path);
  NAVAR_REQUIRE(out);
  return guarded([&] { *out = new navar_model{navar::load_checkpoint(path), {}}; });
}

size_t navar_model_variables(const navar_model* model) {
  return model ? model->value.variables() : 0;
}

const char* navar_model_variable_name(const navar_model* model, size_t index) {
  if (model == nullptr || index >= model->value.variable_names().size()) return nullptr;
  return model->value.variable_names()[index].c_str();
}

const char* navar_model_describe(const navar_model* model) {
  if (model == nullptr) return "";
  auto* mutable_model = const_cast<navar_model*>(model);
  mutable_model->text = navar::format_config(model->value.config());
  return mutable_model->text.c_str();
}

void navar_model_free(navar_model* model) { delete model; }

// Scores

navar_status navar_score(const navar_model* model, const navar_dataset* dataset,
                         navar_scores** out) {
  NAVAR_REQUIRE(model);
  NAVAR_REQUIRE(dataset);
  NAVAR_REQUIRE(out);
  return guarded([&] {
    const auto contribs = navar::extract_contributions(model->value, dataset->value);
    *out = new navar_scores{navar::score_links(contribs)};
  });
}

navar_status navar_scores_create(size_t variables, const double* values, navar_scores** out) {
  NAVAR_REQUIRE(values);
  NAVAR_REQUIRE(out);
  if (variables == 0) return set_error(NAVAR_ERR_DIMENSION, "score matrix needs N >= 1");
  return guarded([&] {
    navar::ScoreMatrix m;
    m.variables = variables;
    m.scores.assign(values, values + variables * variables);
    *out = new navar_scores{std::move(m)};
  });
}

navar_status navar_scores_load_csv(const char* path, navar_scores** out) {
  NAVAR_REQUIRE(path);
  NAVAR_REQUIRE(out);
  return guarded([&] { *out = new navar_scores{navar::load_scores_csv(path)}; });
}

navar_status navar_scores_save_csv(const navar_scores* scores, const char* path,
                                   const navar_dataset* names_from) {
  NAVAR_REQUIRE(scores);
  NAVAR_REQUIRE(path);
  return guarded([&] {
    std::vector<std::string> names;
    if (names_from != nullptr) names = names_from->value.variable_names;
    navar::save_scores_csv(scores->value, path, names);
  });
}

size_t navar_scores_variables(const navar_scores* scores) {
  return scores ? scores->value.variables : 0;
}

navar_status navar_scores_get(const navar_scores* scores, size_t cause, size_t effect,
                              double* out) {
  NAVAR_REQUIRE(scores);
  NAVAR_REQUIRE(out);
  if (cause >= scores->value.variables || effect >= scores->value.variables) {
    return set_error(NAVAR_ERR_DIMENSION, "score index out of range");
  }
  *out = scores->value.at(cause, effect);
  return NAVAR_OK;
}

void navar_scores_free(navar_scores* scores) { delete scores; }

navar_status navar_auroc(const navar_scores* scores, const navar_truth* truth,
                         int ignore_self_links, navar_roc** out) {
  NAVAR_REQUIRE(scores);
  NAVAR_REQUIRE(truth);
  NAVAR_REQUIRE(out);
  return guarded([&] {
    *out = new navar_roc{navar::auroc(scores->value, truth->value, ignore_self_links != 0)};
  });
}

double navar_roc_auroc(const navar_roc* roc) { return roc ? roc->value.auroc : 0.0; }

size_t navar_roc_point_count(const navar_roc* roc) { return roc ? roc->value.points.size() : 0; }

navar_status navar_roc_point(const navar_roc* roc, size_t index, double* fpr, double* tpr,
                             double* threshold) {
  NAVAR_REQUIRE(roc);
  if (index >= roc->value.points.size()) {
    return set_error(NAVAR_ERR_DIMENSION, "ROC point out of range");
  }
  const auto& p = roc->value.points[index];
  if (fpr) *fpr = p.false_positive_rate;
  if (tpr) *tpr = p.true_positive_rate;
  if (threshold) *threshold = p.threshold;
  return NAVAR_OK;
}

navar_status navar_roc_save_csv(const navar_roc* roc, const char* path) {
  NAVAR_REQUIRE(roc);
  NAVAR_REQUIRE(path);
  return guarded([&] { navar::save_roc_csv(roc->value, path); });
}

void navar_roc_free(navar_roc* roc) { delete roc; }

// Lag analysis

navar_status navar_lag_analysis(const navar_model* model, const navar_dataset* dataset,
                                size_t cause, size_t effect, navar_lags** out) {
  NAVAR_REQUIRE(model);
  NAVAR_REQUIRE(dataset);
  NAVAR_REQUIRE(out);
  return guarded([&] {
    *out = new navar_lags{navar::lag_mask_analysis(model->value, dataset->value, cause, effect)};
  });
}

size_t navar_lags_count(const navar_lags* lags) { return lags ? lags->value.records.size() : 0; }

navar_status navar_lags_record(const navar_lags* lags, size_t index, size_t* lag, double* score,
                               double* mse, double* delta_score) {
  NAVAR_REQUIRE(lags);
  if (index >= lags->value.records.size()) {
    return set_error(NAVAR_ERR_DIMENSION, "lag record out of range");
  }
  const auto& r = lags->value.records[index];
  if (lag) *lag = r.lag;
  if (score) *score = r.score;
  if (mse) *mse = r.mse;
  if (delta_score) *delta_score = r.delta_score;
  return NAVAR_OK;
}

navar_status navar_lags_save_csv(const navar_lags* lags, const char* path) {
  NAVAR_REQUIRE(lags);
  NAVAR_REQUIRE(path);
  return guarded([&] { navar::save_lags_csv(lags->value, path); });
}

void navar_lags_free(navar_lags* lags) { delete lags; }

}  // extern "C"
