// tempo-snn: experiment harness for the temporal-hierarchy spiking network
// engine. Thin driver over the C API in tempo_snn.h.

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tempo_snn.h"

namespace {

struct ConfigDeleter {
  void operator()(tsnn_config* c) const { tsnn_config_free(c); }
};
using ConfigPtr = std::unique_ptr<tsnn_config, ConfigDeleter>;

struct StringOut {
  char* s = nullptr;
  ~StringOut() { tsnn_string_free(s); }
};

int status_to_exit(tsnn_status s) {
  switch (s) {
    case TSNN_OK:
      return 0;
    case TSNN_ERR_INVALID_ARGUMENT:
      return 1;
    case TSNN_ERR_TOLERANCE:
      return 3;
    default:
      return 2;
  }
}

int fail(tsnn_status s) {
  std::fprintf(stderr, "error: %s\n", tsnn_last_error());
  return status_to_exit(s);
}

ConfigPtr load_config_or_null(const std::string& path, bool has_seed, uint64_t seed,
                              tsnn_status& status) {
  tsnn_config* raw = nullptr;
  status = tsnn_config_load(path.c_str(), &raw);
  ConfigPtr config(raw);
  if (status != TSNN_OK) return nullptr;
  if (has_seed && config) {
    status = tsnn_config_set(config.get(), "optim.seed", std::to_string(seed).c_str());
    if (status != TSNN_OK) return nullptr;
  }
  return config;
}

// "key=v1,v2,v3" -> JSON fragments for the sweep spec
bool parse_sweep_arg(const std::string& arg, std::string& key, std::string& grid_json) {
  const size_t eq = arg.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 >= arg.size()) return false;
  key = arg.substr(0, eq);
  grid_json = "[";
  std::string values = arg.substr(eq + 1);
  size_t pos = 0;
  bool first = true;
  while (pos <= values.size()) {
    size_t comma = values.find(',', pos);
    if (comma == std::string::npos) comma = values.size();
    if (comma == pos) return false;
    if (!first) grid_json += ",";
    grid_json += values.substr(pos, comma - pos);
    first = false;
    pos = comma + 1;
  }
  grid_json += "]";
  return !first;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tempo-snn: trainable spiking networks with temporal-hierarchy initialization"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  uint64_t seed = 0;
  bool has_seed = false;
  int jobs = 1;

  const auto add_common = [&](CLI::App* cmd, bool config_required) {
    auto* opt = cmd->add_option("--config", config_path, "JSON config file");
    if (config_required) opt->required();
    cmd->add_option("--seed", seed, "override optim.seed")->each([&](const std::string&) {
      has_seed = true;
    });
    cmd->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--out", out_dir, "output directory (overrides config out_dir)");
  };

  auto* cmd_train = app.add_subcommand("train", "train n_trials seeds, write metrics and checkpoints");
  add_common(cmd_train, true);

  auto* cmd_eval = app.add_subcommand("eval", "evaluate a checkpoint on the config's test split");
  std::string checkpoint_path;
  bool eval_json = false;
  add_common(cmd_eval, true);
  cmd_eval->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  cmd_eval->add_flag("--json", eval_json, "print full JSON instead of two lines");

  auto* cmd_sweep = app.add_subcommand("sweep", "cross-product sweep over one or two config keys");
  std::vector<std::string> sweep_args;
  std::vector<std::string> baseline_args;
  add_common(cmd_sweep, true);
  cmd_sweep->add_option("--sweep", sweep_args, "key=v1,v2,... (repeat for a second key)")
      ->required()
      ->expected(1, 2);
  cmd_sweep->add_option("--baseline", baseline_args, "key=value overrides for a baseline run");

  auto* cmd_gradcheck =
      app.add_subcommand("gradcheck", "compare backprop gradients against finite differences");
  int n_cases = 20;
  add_common(cmd_gradcheck, true);
  cmd_gradcheck->add_option("--cases", n_cases, "number of random cases")
      ->check(CLI::PositiveNumber);

  auto* cmd_gen = app.add_subcommand("gen-mtsxor", "generate the synthetic XOR dataset caches");
  add_common(cmd_gen, true);

  CLI11_PARSE(app, argc, argv);

  tsnn_status status = TSNN_OK;
  ConfigPtr config = load_config_or_null(config_path, has_seed, seed, status);
  if (!config) return fail(status);

  if (app.got_subcommand(cmd_train)) {
    StringOut summary;
    status = tsnn_run_train(config.get(), out_dir.c_str(), jobs, &summary.s);
    if (status != TSNN_OK) return fail(status);
    std::printf("%s\n", summary.s);
    return 0;
  }

  if (app.got_subcommand(cmd_eval)) {
    StringOut result;
    status = tsnn_run_eval(checkpoint_path.c_str(), config.get(), jobs, &result.s);
    if (status != TSNN_OK) return fail(status);
    if (eval_json) {
      std::printf("%s\n", result.s);
    } else {
      // result is a small flat JSON object; extract the two numbers crudely
      const std::string text(result.s);
      const auto grab = [&](const char* field) {
        const size_t at = text.find(field);
        if (at == std::string::npos) return std::string("?");
        const size_t colon = text.find(':', at);
        size_t end = text.find_first_of(",}\n", colon);
        return text.substr(colon + 1, end - colon - 1);
      };
      std::printf("test_accuracy:%s\n", grab("test_accuracy").c_str());
      std::printf("test_loss:%s\n", grab("test_loss").c_str());
    }
    return 0;
  }

  if (app.got_subcommand(cmd_sweep)) {
    std::string spec = "{\"keys\":[";
    std::string grids = "\"grids\":[";
    for (size_t i = 0; i < sweep_args.size(); ++i) {
      std::string key, grid;
      if (!parse_sweep_arg(sweep_args[i], key, grid)) {
        std::fprintf(stderr, "error: bad --sweep argument '%s' (want key=v1,v2,...)\n",
                     sweep_args[i].c_str());
        return 1;
      }
      if (i > 0) {
        spec += ",";
        grids += ",";
      }
      spec += "\"" + key + "\"";
      grids += grid;
    }
    spec += "]," + grids + "]";
    if (!baseline_args.empty()) {
      spec += ",\"baseline\":{";
      for (size_t i = 0; i < baseline_args.size(); ++i) {
        const size_t eq = baseline_args[i].find('=');
        if (eq == std::string::npos) {
          std::fprintf(stderr, "error: bad --baseline argument '%s' (want key=value)\n",
                       baseline_args[i].c_str());
          return 1;
        }
        if (i > 0) spec += ",";
        spec += "\"" + baseline_args[i].substr(0, eq) + "\":" + baseline_args[i].substr(eq + 1);
      }
      spec += "}";
    }
    spec += "}";

    StringOut summary;
    status = tsnn_run_sweep(config.get(), spec.c_str(), out_dir.c_str(), jobs, &summary.s);
    if (status != TSNN_OK) return fail(status);
    std::printf("%s\n", summary.s);
    return 0;
  }

  if (app.got_subcommand(cmd_gradcheck)) {
    StringOut report;
    status = tsnn_run_gradcheck(config.get(), n_cases, jobs, &report.s);
    if (report.s) std::printf("%s\n", report.s);
    if (status != TSNN_OK) return fail(status);
    return 0;
  }

  if (app.got_subcommand(cmd_gen)) {
    const std::string dest = out_dir.empty() ? "." : out_dir;
    status = tsnn_gen_mtsxor(config.get(), dest.c_str());
    if (status != TSNN_OK) return fail(status);
    std::printf("wrote %s/mtsxor_train.tsnc and %s/mtsxor_test.tsnc\n", dest.c_str(),
                dest.c_str());
    return 0;
  }

  return 1;
}
