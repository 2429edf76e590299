#pragma once

#include <stdexcept>
#include <string>

#include "tsnn/config.hpp"

namespace tsnn {

// Raised when a numerical acceptance check (gradcheck) exceeds tolerance;
// distinguishes "checked and failed" from operational errors.
struct ToleranceFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Trains config.n_trials seeds, writing per-trial metrics.csv and
// checkpoint.tsnn files plus an aggregate summary.json (median and quartiles
// across trials) under the output directory. Returns the summary JSON text.
// out_dir_override, when non-empty, replaces config.out_dir.
std::string run_train(const RunConfig& config, const std::string& out_dir_override, int jobs);

// Evaluates a checkpoint on the config's test split; returns JSON with
// test_accuracy and test_loss. Throws on checkpoint/config spec mismatch.
std::string run_eval(const std::string& checkpoint_path, const RunConfig& config, int jobs);

struct GradCheckResult {
  bool pass = false;
  std::string report_json;
};

// Compares backprop-through-time gradients against central finite differences
// on randomized toy instances of the config's network (relaxed spike mode,
// trajectories near the surrogate box edges are re-drawn). Networks larger
// than 2000 parameters are rejected.
GradCheckResult run_gradcheck(const RunConfig& config, int n_cases, int jobs);

// Cross-product sweep over one or two config keys. sweep_json:
//   {"keys": ["hierarchy.delta_tau"], "grids": [[-0.5, 0.0, 0.5]],
//    "baseline": {"hierarchy.delta_tau": 0.0}}   (baseline optional)
// Each cell runs n_trials trainings in its own subdirectory; results are
// aggregated into sweep.csv and summary.json. Returns the summary JSON text.
std::string run_sweep(const RunConfig& config, const std::string& sweep_json,
                      const std::string& out_dir_override, int jobs);

// Generates the synthetic XOR dataset described by the config and writes it
// as a cache file.
void generate_mtsxor_cache(const RunConfig& config, const std::string& out_path);

}  // namespace tsnn
