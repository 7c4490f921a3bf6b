#ifndef NAVAR_NAVAR_H_
#define NAVAR_NAVAR_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(NAVAR_BUILDING_LIBRARY)
#    define NAVAR_API __declspec(dllexport)
#  else
#    define NAVAR_API __declspec(dllimport)
#  endif
#else
#  define NAVAR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every fallible call returns a status. On failure the message is available
   from navar_last_error() on the calling thread until its next failing call.
   Output handles are left untouched on failure. */
typedef enum navar_status {
  NAVAR_OK = 0,
  NAVAR_ERR_INVALID_ARGUMENT = 1,
  NAVAR_ERR_DIMENSION = 2,
  NAVAR_ERR_CONTRACT = 3,
  NAVAR_ERR_CONFIG = 4,
  NAVAR_ERR_PARSE = 5,
  NAVAR_ERR_VERSION = 6,
  NAVAR_ERR_DIVERGENCE = 7,
  NAVAR_ERR_DATASET_TOO_SHORT = 8,
  NAVAR_ERR_CONSTANT_VARIABLE = 9,
  NAVAR_ERR_UNDEFINED_AUROC = 10,
  NAVAR_ERR_UNSUPPORTED = 11,
  NAVAR_ERR_IO = 12,
  NAVAR_ERR_GENERATION = 13,
  NAVAR_ERR_INTERNAL = 14
} navar_status;

typedef struct navar_config navar_config;
typedef struct navar_dataset navar_dataset;
typedef struct navar_truth navar_truth;
typedef struct navar_model navar_model;
typedef struct navar_report navar_report;
typedef struct navar_scores navar_scores;
typedef struct navar_roc navar_roc;
typedef struct navar_lags navar_lags;

NAVAR_API const char* navar_version(void);
NAVAR_API const char* navar_status_name(navar_status status);
NAVAR_API const char* navar_last_error(void);

/* Configuration. Keys: backbone, K, hidden_units, hidden_layers, batch_size,
   learning_rate, lambda, mu, epochs, seed, val_fraction. */
NAVAR_API navar_status navar_config_create(navar_config** out);
NAVAR_API navar_status navar_config_from_preset(const char* name, navar_config** out);
/* Applies a key=value file on top of the current values. */
NAVAR_API navar_status navar_config_load(navar_config* config, const char* path);
NAVAR_API navar_status navar_config_set(navar_config* config, const char* key,
                                        const char* value);
/* key=value lines; the pointer stays valid until the config changes or is freed. */
NAVAR_API const char* navar_config_describe(const navar_config* config);
NAVAR_API void navar_config_free(navar_config* config);

NAVAR_API size_t navar_preset_count(void);
NAVAR_API const char* navar_preset_name(size_t index);
NAVAR_API const char* navar_preset_description(size_t index);

/* Datasets. Generated datasets carry their ground truth. */
NAVAR_API navar_status navar_generate_toy3(size_t steps, uint64_t seed, navar_dataset** out);
NAVAR_API navar_status navar_generate_lag_scm(size_t steps, uint64_t seed, navar_dataset** out);
NAVAR_API navar_status navar_generate_linear_var(size_t variables, size_t steps, size_t lags,
                                                 double density, double coeff_scale,
                                                 uint64_t seed, size_t replicates,
                                                 navar_dataset** out);
NAVAR_API navar_status navar_dataset_load_csv(const char* path, int has_header, char delimiter,
                                              navar_dataset** out);
NAVAR_API navar_status navar_dataset_save_csv(const navar_dataset* dataset, const char* path);
NAVAR_API size_t navar_dataset_variables(const navar_dataset* dataset);
NAVAR_API size_t navar_dataset_replicates(const navar_dataset* dataset);
NAVAR_API size_t navar_dataset_steps(const navar_dataset* dataset, size_t replicate);
NAVAR_API const char* navar_dataset_variable_name(const navar_dataset* dataset, size_t index);
NAVAR_API navar_status navar_dataset_value(const navar_dataset* dataset, size_t replicate,
                                           size_t step, size_t variable, double* out);
/* Copies the dataset's ground truth; NAVAR_ERR_CONTRACT when it has none. */
NAVAR_API navar_status navar_dataset_truth(const navar_dataset* dataset, navar_truth** out);
NAVAR_API void navar_dataset_free(navar_dataset* dataset);

NAVAR_API navar_status navar_truth_load_csv(const char* path, navar_truth** out);
NAVAR_API navar_status navar_truth_save_csv(const navar_truth* truth, const char* path);
NAVAR_API size_t navar_truth_variables(const navar_truth* truth);
NAVAR_API navar_status navar_truth_link(const navar_truth* truth, size_t cause, size_t effect,
                                        int* out);
NAVAR_API void navar_truth_free(navar_truth* truth);

/* Training. `report` may be NULL. */
NAVAR_API navar_status navar_train(const navar_dataset* dataset, const navar_config* config,
                                   navar_model** model, navar_report** report);
NAVAR_API size_t navar_report_epochs(const navar_report* report);
/* `val_mse` is NaN when training had no validation split. */
NAVAR_API navar_status navar_report_epoch(const navar_report* report, size_t epoch,
                                          double* train_loss, double* val_mse);
NAVAR_API int navar_report_has_validation(const navar_report* report);
NAVAR_API double navar_report_seconds(const navar_report* report);
NAVAR_API void navar_report_free(navar_report* report);

NAVAR_API navar_status navar_model_save(const navar_model* model, const char* path);
NAVAR_API navar_status navar_model_load(const char* path, navar_model** out);
NAVAR_API size_t navar_model_variables(const navar_model* model);
NAVAR_API const char* navar_model_variable_name(const navar_model* model, size_t index);
NAVAR_API const char* navar_model_describe(const navar_model* model);
NAVAR_API void navar_model_free(navar_model* model);

/* Causal scores: entry (cause, effect) is the spread of that contribution. */
NAVAR_API navar_status navar_score(const navar_model* model, const navar_dataset* dataset,
                                   navar_scores** out);
/* `values` holds variables * variables scores in row-major (cause, effect) order. */
NAVAR_API navar_status navar_scores_create(size_t variables, const double* values,
                                           navar_scores** out);
NAVAR_API navar_status navar_scores_load_csv(const char* path, navar_scores** out);
/* `names_from` may be NULL; otherwise its variable names become the header. */
NAVAR_API navar_status navar_scores_save_csv(const navar_scores* scores, const char* path,
                                             const navar_dataset* names_from);
NAVAR_API size_t navar_scores_variables(const navar_scores* scores);
NAVAR_API navar_status navar_scores_get(const navar_scores* scores, size_t cause, size_t effect,
                                        double* out);
NAVAR_API void navar_scores_free(navar_scores* scores);

NAVAR_API navar_status navar_auroc(const navar_scores* scores, const navar_truth* truth,
                                   int ignore_self_links, navar_roc** out);
NAVAR_API double navar_roc_auroc(const navar_roc* roc);
NAVAR_API size_t navar_roc_point_count(const navar_roc* roc);
NAVAR_API navar_status navar_roc_point(const navar_roc* roc, size_t index, double* fpr,
                                       double* tpr, double* threshold);
NAVAR_API navar_status navar_roc_save_csv(const navar_roc* roc, const char* path);
NAVAR_API void navar_roc_free(navar_roc* roc);

/* Lag masking for an MLP model; records cover k = 1 .. K. */
NAVAR_API navar_status navar_lag_analysis(const navar_model* model, const navar_dataset* dataset,
                                          size_t cause, size_t effect, navar_lags** out);
NAVAR_API size_t navar_lags_count(const navar_lags* lags);
NAVAR_API navar_status navar_lags_record(const navar_lags* lags, size_t index, size_t* lag,
                                         double* score, double* mse, double* delta_score);
NAVAR_API navar_status navar_lags_save_csv(const navar_lags* lags, const char* path);
NAVAR_API void navar_lags_free(navar_lags* lags);

#ifdef __cplusplus
}
#endif

#endif  /* NAVAR_NAVAR_H_ */
