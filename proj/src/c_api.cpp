#include "tempo_snn.h"

#include <cstring>
#include <new>
#include <stdexcept>
#include <string>

#include "tsnn/checkpoint.hpp"
#include "tsnn/config.hpp"
#include "tsnn/dataset.hpp"
#include "tsnn/runner.hpp"
#include "tsnn/sim.hpp"

struct tsnn_config {
  tsnn::RunConfig cfg;
};

struct tsnn_dataset {
  tsnn::SpikeDataset ds;
};

struct tsnn_model {
  tsnn::Checkpoint ck;
};

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

// Runs fn, translating exceptions into status codes + the thread-local
// message. std::invalid_argument/domain_error map to usage errors, anything
// else to runtime failures.
template <typename Fn>
tsnn_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const std::invalid_argument& e) {
    set_error(e.what());
    return TSNN_ERR_INVALID_ARGUMENT;
  } catch (const std::domain_error& e) {
    set_error(e.what());
    return TSNN_ERR_INVALID_ARGUMENT;
  } catch (const tsnn::ToleranceFailure& e) {
    set_error(e.what());
    return TSNN_ERR_TOLERANCE;
  } catch (const std::bad_alloc&) {
    set_error("out of memory");
    return TSNN_ERR_RUNTIME;
  } catch (const std::exception& e) {
    set_error(e.what());
    return TSNN_ERR_RUNTIME;
  }
}

tsnn_status require(bool ok, const char* msg) {
  if (ok) return TSNN_OK;
  set_error(msg);
  return TSNN_ERR_INVALID_ARGUMENT;
}

}  // namespace

extern "C" {

const char* tsnn_version(void) { return "1.0.0"; }

const char* tsnn_last_error(void) { return g_last_error.c_str(); }

void tsnn_string_free(char* s) { delete[] s; }

tsnn_status tsnn_config_load(const char* path, tsnn_config** out_config) {
  if (tsnn_status s = require(path && out_config, "tsnn_config_load: NULL argument")) return s;
  return guarded([&] {
    *out_config = new tsnn_config{tsnn::load_config(path)};
    return TSNN_OK;
  });
}

tsnn_status tsnn_config_parse(const char* json_text, tsnn_config** out_config) {
  if (tsnn_status s = require(json_text && out_config, "tsnn_config_parse: NULL argument"))
    return s;
  return guarded([&] {
    *out_config = new tsnn_config{tsnn::parse_config(json_text)};
    return TSNN_OK;
  });
}

tsnn_status tsnn_config_set(tsnn_config* config, const char* dotted_key, const char* json_value) {
  if (tsnn_status s =
          require(config && dotted_key && json_value, "tsnn_config_set: NULL argument"))
    return s;
  return guarded([&] {
    tsnn::set_config_key(config->cfg, dotted_key, json_value);
    return TSNN_OK;
  });
}

tsnn_status tsnn_config_dump(const tsnn_config* config, char** out_json) {
  if (tsnn_status s = require(config && out_json, "tsnn_config_dump: NULL argument")) return s;
  return guarded([&] {
    *out_json = dup_string(tsnn::dump_config(config->cfg));
    return TSNN_OK;
  });
}

void tsnn_config_free(tsnn_config* config) { delete config; }

tsnn_status tsnn_dataset_gen_mtsxor(const tsnn_config* config, uint64_t seed, int n_samples,
                                    tsnn_dataset** out_dataset) {
  if (tsnn_status s = require(config && out_dataset, "tsnn_dataset_gen_mtsxor: NULL argument"))
    return s;
  return guarded([&] {
    const tsnn::MtsXorConfig m = tsnn::mtsxor_from_config(config->cfg);
    const int n = n_samples > 0 ? n_samples : config->cfg.data.train_samples;
    *out_dataset = new tsnn_dataset{tsnn::mtsxor_generate(m, n, seed)};
    return TSNN_OK;
  });
}

tsnn_status tsnn_dataset_read_cache(const char* path, tsnn_dataset** out_dataset) {
  if (tsnn_status s = require(path && out_dataset, "tsnn_dataset_read_cache: NULL argument"))
    return s;
  return guarded([&] {
    *out_dataset = new tsnn_dataset{tsnn::read_cache(path)};
    return TSNN_OK;
  });
}

tsnn_status tsnn_dataset_write_cache(const tsnn_dataset* dataset, const char* path) {
  if (tsnn_status s = require(dataset && path, "tsnn_dataset_write_cache: NULL argument"))
    return s;
  return guarded([&] {
    tsnn::write_cache(dataset->ds, path);
    return TSNN_OK;
  });
}

tsnn_status tsnn_dataset_shape(const tsnn_dataset* dataset, int* n_samples, int* steps,
                               int* channels, int* n_classes) {
  if (tsnn_status s = require(dataset != nullptr, "tsnn_dataset_shape: NULL dataset")) return s;
  if (n_samples) *n_samples = dataset->ds.n_samples;
  if (steps) *steps = dataset->ds.grid.steps;
  if (channels) *channels = dataset->ds.channels;
  if (n_classes) *n_classes = dataset->ds.n_classes;
  return TSNN_OK;
}

void tsnn_dataset_free(tsnn_dataset* dataset) { delete dataset; }

tsnn_status tsnn_model_load(const char* checkpoint_path, tsnn_model** out_model) {
  if (tsnn_status s = require(checkpoint_path && out_model, "tsnn_model_load: NULL argument"))
    return s;
  return guarded([&] {
    *out_model = new tsnn_model{tsnn::load_checkpoint(checkpoint_path)};
    return TSNN_OK;
  });
}

tsnn_status tsnn_model_shape(const tsnn_model* model, int* input_size, int* steps,
                             int* output_size) {
  if (tsnn_status s = require(model != nullptr, "tsnn_model_shape: NULL model")) return s;
  if (input_size) *input_size = model->ck.spec.input_size;
  if (steps) *steps = model->ck.spec.grid.steps;
  if (output_size) *output_size = model->ck.spec.output_size;
  return TSNN_OK;
}

tsnn_status tsnn_model_forward(const tsnn_model* model, const uint8_t* input, size_t input_len,
                               double* out, size_t out_len) {
  if (tsnn_status s = require(model && input && out, "tsnn_model_forward: NULL argument"))
    return s;
  return guarded([&] {
    const auto& spec = model->ck.spec;
    const size_t want_in = static_cast<size_t>(spec.grid.steps) * spec.input_size;
    const size_t want_out = static_cast<size_t>(spec.grid.steps) * spec.output_size;
    if (input_len != want_in)
      throw std::invalid_argument("tsnn_model_forward: input length must be steps*input_size");
    if (out_len != want_out)
      throw std::invalid_argument("tsnn_model_forward: output length must be steps*output_size");
    std::vector<double> x(want_in);
    for (size_t i = 0; i < want_in; ++i) x[i] = static_cast<double>(input[i]);
    const auto trace = tsnn::forward_pass(spec, model->ck.params, x);
    std::memcpy(out, trace.data(), want_out * sizeof(double));
    return TSNN_OK;
  });
}

void tsnn_model_free(tsnn_model* model) { delete model; }

tsnn_status tsnn_run_train(const tsnn_config* config, const char* out_dir, int jobs,
                           char** out_summary_json) {
  if (tsnn_status s = require(config != nullptr, "tsnn_run_train: NULL config")) return s;
  return guarded([&] {
    const std::string summary =
        tsnn::run_train(config->cfg, out_dir ? out_dir : "", jobs > 0 ? jobs : 1);
    if (out_summary_json) *out_summary_json = dup_string(summary);
    return TSNN_OK;
  });
}

tsnn_status tsnn_run_eval(const char* checkpoint_path, const tsnn_config* config, int jobs,
                          char** out_json) {
  if (tsnn_status s = require(checkpoint_path && config, "tsnn_run_eval: NULL argument"))
    return s;
  return guarded([&] {
    const std::string text =
        tsnn::run_eval(checkpoint_path, config->cfg, jobs > 0 ? jobs : 1);
    if (out_json) *out_json = dup_string(text);
    return TSNN_OK;
  });
}

tsnn_status tsnn_run_gradcheck(const tsnn_config* config, int n_cases, int jobs,
                               char** out_report_json) {
  if (tsnn_status s = require(config != nullptr, "tsnn_run_gradcheck: NULL config")) return s;
  return guarded([&] {
    const tsnn::GradCheckResult result =
        tsnn::run_gradcheck(config->cfg, n_cases > 0 ? n_cases : 20, jobs > 0 ? jobs : 1);
    if (out_report_json) *out_report_json = dup_string(result.report_json);
    if (!result.pass) {
      set_error("gradient check exceeded tolerance");
      return TSNN_ERR_TOLERANCE;
    }
    return TSNN_OK;
  });
}

tsnn_status tsnn_run_sweep(const tsnn_config* config, const char* sweep_json, const char* out_dir,
                           int jobs, char** out_summary_json) {
  if (tsnn_status s = require(config && sweep_json, "tsnn_run_sweep: NULL argument")) return s;
  return guarded([&] {
    const std::string summary = tsnn::run_sweep(config->cfg, sweep_json, out_dir ? out_dir : "",
                                                jobs > 0 ? jobs : 1);
    if (out_summary_json) *out_summary_json = dup_string(summary);
    return TSNN_OK;
  });
}

tsnn_status tsnn_gen_mtsxor(const tsnn_config* config, const char* out_dir) {
  if (tsnn_status s = require(config && out_dir, "tsnn_gen_mtsxor: NULL argument")) return s;
  return guarded([&] {
    tsnn::generate_mtsxor_cache(config->cfg, out_dir);
    return TSNN_OK;
  });
}

}  // extern "C"
