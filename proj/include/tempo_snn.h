/*
 * tempo_snn - C API for the temporal-hierarchy spiking network engine.
 *
 * All functions return TSNN_OK on success; on failure they return a status
 * code and leave a message retrievable with tsnn_last_error() (thread-local).
 * Objects are opaque handles; every *_free function accepts NULL.
 * Strings returned through char** out-parameters are heap-allocated and must
 * be released with tsnn_string_free().
 */
#ifndef TEMPO_SNN_H
#define TEMPO_SNN_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define TSNN_API __declspec(dllexport)
#else
#define TSNN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tsnn_status {
  TSNN_OK = 0,
  TSNN_ERR_INVALID_ARGUMENT = 1, /* bad usage or config error */
  TSNN_ERR_RUNTIME = 2,          /* IO failure, missing data, divergence */
  TSNN_ERR_TOLERANCE = 3         /* gradient check beyond tolerance */
} tsnn_status;

typedef struct tsnn_config tsnn_config;
typedef struct tsnn_dataset tsnn_dataset;
typedef struct tsnn_model tsnn_model;

TSNN_API const char* tsnn_version(void);
TSNN_API const char* tsnn_last_error(void);
TSNN_API void tsnn_string_free(char* s);

/* --- configuration ------------------------------------------------------ */

/* Loads a JSON config file, applying per-task defaults and rejecting unknown
 * keys. */
TSNN_API tsnn_status tsnn_config_load(const char* path, tsnn_config** out_config);
TSNN_API tsnn_status tsnn_config_parse(const char* json_text, tsnn_config** out_config);

/* Sets one field by dotted path, e.g. ("hierarchy.delta_tau", "0.5"). */
TSNN_API tsnn_status tsnn_config_set(tsnn_config* config, const char* dotted_key,
                                     const char* json_value);
TSNN_API tsnn_status tsnn_config_dump(const tsnn_config* config, char** out_json);
TSNN_API void tsnn_config_free(tsnn_config* config);

/* --- datasets ------------------------------------------------------------ */

/* Generates the synthetic XOR dataset from the config's generator settings.
 * n_samples <= 0 uses the config's train_samples. */
TSNN_API tsnn_status tsnn_dataset_gen_mtsxor(const tsnn_config* config, uint64_t seed,
                                             int n_samples, tsnn_dataset** out_dataset);
TSNN_API tsnn_status tsnn_dataset_read_cache(const char* path, tsnn_dataset** out_dataset);
TSNN_API tsnn_status tsnn_dataset_write_cache(const tsnn_dataset* dataset, const char* path);
TSNN_API tsnn_status tsnn_dataset_shape(const tsnn_dataset* dataset, int* n_samples, int* steps,
                                        int* channels, int* n_classes);
TSNN_API void tsnn_dataset_free(tsnn_dataset* dataset);

/* --- models --------------------------------------------------------------- */

TSNN_API tsnn_status tsnn_model_load(const char* checkpoint_path, tsnn_model** out_model);
TSNN_API tsnn_status tsnn_model_shape(const tsnn_model* model, int* input_size, int* steps,
                                      int* output_size);

/* Runs one sample (row-major steps x input_size spike counts) through the
 * network; writes the output-voltage trace (steps x output_size). */
TSNN_API tsnn_status tsnn_model_forward(const tsnn_model* model, const uint8_t* input,
                                        size_t input_len, double* out, size_t out_len);
TSNN_API void tsnn_model_free(tsnn_model* model);

/* --- harness entry points -------------------------------------------------- */

/* Trains config.n_trials seeds, writing metrics.csv/checkpoint.tsnn per trial
 * and summary.json under out_dir (empty string: config.out_dir). The summary
 * JSON is also returned when out_summary_json is non-NULL. */
TSNN_API tsnn_status tsnn_run_train(const tsnn_config* config, const char* out_dir, int jobs,
                                    char** out_summary_json);

/* Evaluates a checkpoint on the config's test split. */
TSNN_API tsnn_status tsnn_run_eval(const char* checkpoint_path, const tsnn_config* config,
                                   int jobs, char** out_json);

/* Finite-difference validation of the backward pass on randomized toy nets.
 * Returns TSNN_ERR_TOLERANCE (with the report still written) when any
 * gradient disagrees beyond tolerance. */
TSNN_API tsnn_status tsnn_run_gradcheck(const tsnn_config* config, int n_cases, int jobs,
                                        char** out_report_json);

/* Cross-product sweep over one or two config keys; see the sweep spec format
 * in the library documentation. */
TSNN_API tsnn_status tsnn_run_sweep(const tsnn_config* config, const char* sweep_json,
                                    const char* out_dir, int jobs, char** out_summary_json);

/* Writes mtsxor_train.tsnc / mtsxor_test.tsnc cache files under out_dir. */
TSNN_API tsnn_status tsnn_gen_mtsxor(const tsnn_config* config, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* TEMPO_SNN_H */
