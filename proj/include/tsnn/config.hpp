#pragma once

#include <cstdint>
#include <string>

#include "tsnn/dataset.hpp"
#include "tsnn/hierarchy.hpp"
#include "tsnn/loss.hpp"
#include "tsnn/optim.hpp"

namespace tsnn {

// Experiment configuration. Defaults follow the per-task hyperparameter
// table (batch size, epochs, dropout, learning-rate schedule, loss, tau
// means); conv-specific defaults apply when layer_kind is "conv". Unknown
// keys in a config file are rejected.
struct RunConfig {
  std::string task = "mtsxor";  // mtsxor | shd | ssc | custom-cache
  int n_trials = 1;
  std::string out_dir = "runs/out";

  struct Network {
    double dt = 0.01;
    int steps = 100;
    int hidden_layers = 2;
    int hidden_size = 10;
    std::string layer_kind = "dense";  // dense | conv
    double tau_out = 0.2;
  } network;

  struct Hierarchy {
    std::string tau_shape = "homogeneous";  // homogeneous | linear | tanh | paper_literal_linear
    double tau_mean = 0.3;
    double delta_tau = 0.0;
    double steepness = 0.5;
    double centering = 0.5;
    double tau_std_frac = 0.2;
    int mean_kernel = 5;
    int delta_kernel = 0;
    int mean_dilation = 5;
    int delta_dilation = 0;
  } hierarchy;

  OptimSpec optim;
  std::string loss = "max_over_windows";  // sum_softmax | max_over_windows | double_softmax

  struct Data {
    std::string path;       // shd/ssc train file or cache file
    std::string test_path;  // shd/ssc test file
    bool augment = false;
    double valid_fraction = 0.2;
    bool test_as_valid = false;  // evaluation malpractice, kept only for comparisons
    // mtsxor generator settings (grid comes from `network`)
    int neurons_per_channel = 10;
    double cue_duration = 0.1;
    double gap = 0.05;
    int n_cues = 5;
    double rate_active = 100.0;
    double rate_inactive = 0.0;
    double background_rate = 5.0;
    int train_samples = 2048;
    int test_samples = 512;
    int64_t data_seed = -1;  // -1: derive from the trial seed
  } data;
};

// Parses/serializes the JSON representation. parse_config applies per-task
// defaults first, then overlays the given document, rejecting unknown keys.
// Parse errors carry line/column positions.
RunConfig parse_config(const std::string& json_text, const std::string& origin = "<config>");
RunConfig load_config(const std::string& path);
std::string dump_config(const RunConfig& config);  // full tree, all keys

// Sets one field addressed by a dotted path ("hierarchy.delta_tau") to a JSON
// value ("0.5", "\"tanh\""). Used by sweeps and CLI overrides.
void set_config_key(RunConfig& config, const std::string& dotted_key,
                    const std::string& json_value);

LossKind parse_loss_kind(const std::string& name);
TauShape parse_tau_shape(const std::string& name);

// Derived builders used by the harness.
MtsXorConfig mtsxor_from_config(const RunConfig& config);
NetworkSpec network_spec_from_config(const RunConfig& config, int input_size, int output_size);
std::vector<double> hidden_tau_means_from_config(const RunConfig& config);

}  // namespace tsnn
