// Exercises the shared-library surface the CLI is built on.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "tempo_snn.h"

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("tsnn_capi_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

struct ConfigHandle {
  tsnn_config* ptr = nullptr;
  ~ConfigHandle() { tsnn_config_free(ptr); }
};

const char* kToyTrainConfig = R"({
  "task": "mtsxor",
  "n_trials": 2,
  "network": {"hidden_layers": 2, "hidden_size": 6},
  "hierarchy": {"tau_shape": "linear", "delta_tau": 0.2},
  "optim": {"epochs": 2, "batch_size": 64, "seed": 5},
  "data": {"mtsxor": {"train_samples": 96, "test_samples": 48, "seed": 11}}
})";

}  // namespace

TEST_CASE("version and error strings exist") {
  CHECK(std::strlen(tsnn_version()) > 0);
  CHECK(tsnn_last_error() != nullptr);
}

TEST_CASE("config parse, set, dump") {
  ConfigHandle cfg;
  REQUIRE(tsnn_config_parse(R"({"task": "mtsxor"})", &cfg.ptr) == TSNN_OK);
  CHECK(tsnn_config_set(cfg.ptr, "hierarchy.delta_tau", "0.25") == TSNN_OK);
  char* dumped = nullptr;
  REQUIRE(tsnn_config_dump(cfg.ptr, &dumped) == TSNN_OK);
  CHECK(std::string(dumped).find("0.25") != std::string::npos);
  tsnn_string_free(dumped);

  SUBCASE("bad JSON reports a usage error with a message") {
    tsnn_config* bad = nullptr;
    CHECK(tsnn_config_parse("{nope", &bad) == TSNN_ERR_INVALID_ARGUMENT);
    CHECK(std::strlen(tsnn_last_error()) > 0);
    CHECK(bad == nullptr);
  }
  SUBCASE("unknown key is rejected") {
    CHECK(tsnn_config_set(cfg.ptr, "optim.nonsense", "1") == TSNN_ERR_INVALID_ARGUMENT);
    CHECK(std::string(tsnn_last_error()).find("optim.nonsense") != std::string::npos);
  }
  SUBCASE("NULL arguments are usage errors") {
    CHECK(tsnn_config_parse(nullptr, &cfg.ptr) == TSNN_ERR_INVALID_ARGUMENT);
    CHECK(tsnn_config_dump(cfg.ptr, nullptr) == TSNN_ERR_INVALID_ARGUMENT);
  }
}

TEST_CASE("config load from a missing file is a usage error") {
  tsnn_config* cfg = nullptr;
  CHECK(tsnn_config_load("/does/not/exist.json", &cfg) != TSNN_OK);
}

TEST_CASE("dataset generation, cache round trip and shape queries") {
  TempDir tmp;
  ConfigHandle cfg;
  REQUIRE(tsnn_config_parse(R"({"task": "mtsxor"})", &cfg.ptr) == TSNN_OK);

  tsnn_dataset* ds = nullptr;
  REQUIRE(tsnn_dataset_gen_mtsxor(cfg.ptr, 42, 24, &ds) == TSNN_OK);
  int n = 0, steps = 0, channels = 0, classes = 0;
  REQUIRE(tsnn_dataset_shape(ds, &n, &steps, &channels, &classes) == TSNN_OK);
  CHECK(n == 24);
  CHECK(steps == 100);
  CHECK(channels == 20);
  CHECK(classes == 2);

  const std::string path = tmp.file("ds.tsnc");
  REQUIRE(tsnn_dataset_write_cache(ds, path.c_str()) == TSNN_OK);
  tsnn_dataset* back = nullptr;
  REQUIRE(tsnn_dataset_read_cache(path.c_str(), &back) == TSNN_OK);
  int n2 = 0;
  tsnn_dataset_shape(back, &n2, nullptr, nullptr, nullptr);
  CHECK(n2 == 24);
  tsnn_dataset_free(ds);
  tsnn_dataset_free(back);

  tsnn_dataset* missing = nullptr;
  CHECK(tsnn_dataset_read_cache(tmp.file("no.tsnc").c_str(), &missing) == TSNN_ERR_RUNTIME);
}

TEST_CASE("train, eval, model forward through the C API") {
  TempDir tmp;
  ConfigHandle cfg;
  REQUIRE(tsnn_config_parse(kToyTrainConfig, &cfg.ptr) == TSNN_OK);

  char* summary = nullptr;
  REQUIRE(tsnn_run_train(cfg.ptr, tmp.file("run").c_str(), 2, &summary) == TSNN_OK);
  REQUIRE(summary != nullptr);
  const std::string summary_text(summary);
  tsnn_string_free(summary);
  CHECK(summary_text.find("\"test_acc\"") != std::string::npos);
  CHECK(fs::exists(tmp.file("run") + "/trial_0/metrics.csv"));
  CHECK(fs::exists(tmp.file("run") + "/trial_1/checkpoint.tsnn"));
  CHECK(fs::exists(tmp.file("run") + "/summary.json"));

  SUBCASE("eval of the trained checkpoint") {
    char* result = nullptr;
    REQUIRE(tsnn_run_eval((tmp.file("run") + "/trial_0/checkpoint.tsnn").c_str(), cfg.ptr, 1,
                          &result) == TSNN_OK);
    CHECK(std::string(result).find("test_accuracy") != std::string::npos);
    tsnn_string_free(result);
  }

  SUBCASE("model load and forward") {
    tsnn_model* model = nullptr;
    REQUIRE(tsnn_model_load((tmp.file("run") + "/trial_0/checkpoint.tsnn").c_str(), &model) ==
            TSNN_OK);
    int input = 0, steps = 0, output = 0;
    REQUIRE(tsnn_model_shape(model, &input, &steps, &output) == TSNN_OK);
    CHECK(input == 20);
    CHECK(steps == 100);
    CHECK(output == 2);

    std::vector<uint8_t> x(static_cast<size_t>(steps) * input, 0);
    x[5 * input + 3] = 1;
    std::vector<double> out(static_cast<size_t>(steps) * output, -1.0);
    REQUIRE(tsnn_model_forward(model, x.data(), x.size(), out.data(), out.size()) == TSNN_OK);
    for (int t = 0; t < 5; ++t)
      for (int o = 0; o < output; ++o) CHECK(out[t * output + o] == 0.0);  // causal start

    CHECK(tsnn_model_forward(model, x.data(), x.size() - 1, out.data(), out.size()) ==
          TSNN_ERR_INVALID_ARGUMENT);
    tsnn_model_free(model);
  }

  SUBCASE("checkpoint/config mismatch is a runtime error") {
    ConfigHandle other;
    REQUIRE(tsnn_config_parse(R"({"task": "mtsxor", "network": {"hidden_size": 9}})",
                              &other.ptr) == TSNN_OK);
    char* result = nullptr;
    CHECK(tsnn_run_eval((tmp.file("run") + "/trial_0/checkpoint.tsnn").c_str(), other.ptr, 1,
                        &result) == TSNN_ERR_RUNTIME);
    CHECK(std::string(tsnn_last_error()).find("mismatch") != std::string::npos);
  }
}

TEST_CASE("gen-mtsxor writes both cache files") {
  TempDir tmp;
  ConfigHandle cfg;
  REQUIRE(tsnn_config_parse(R"({
    "task": "mtsxor",
    "data": {"mtsxor": {"train_samples": 16, "test_samples": 8, "seed": 3}}
  })",
                            &cfg.ptr) == TSNN_OK);
  REQUIRE(tsnn_gen_mtsxor(cfg.ptr, tmp.file("caches").c_str()) == TSNN_OK);
  CHECK(fs::exists(tmp.file("caches") + "/mtsxor_train.tsnc"));
  CHECK(fs::exists(tmp.file("caches") + "/mtsxor_test.tsnc"));
}

TEST_CASE("gradcheck through the C API") {
  ConfigHandle cfg;
  REQUIRE(tsnn_config_parse(R"({
    "task": "mtsxor",
    "network": {"steps": 10, "hidden_layers": 2, "hidden_size": 6, "tau_out": 0.05},
    "data": {"mtsxor": {"neurons_per_channel": 3}},
    "optim": {"train_tau": true, "dropout": 0.0, "seed": 1}
  })",
                            &cfg.ptr) == TSNN_OK);
  char* report = nullptr;
  REQUIRE(tsnn_run_gradcheck(cfg.ptr, 4, 1, &report) == TSNN_OK);
  CHECK(std::string(report).find("\"pass\": true") != std::string::npos);
  tsnn_string_free(report);

  SUBCASE("oversized network is a usage error") {
    ConfigHandle big;
    REQUIRE(tsnn_config_parse(R"({"task": "shd"})", &big.ptr) == TSNN_OK);
    CHECK(tsnn_run_gradcheck(big.ptr, 1, 1, nullptr) == TSNN_ERR_INVALID_ARGUMENT);
    CHECK(std::string(tsnn_last_error()).find("2000") != std::string::npos);
  }
}

TEST_CASE("sweep through the C API") {
  TempDir tmp;
  ConfigHandle cfg;
  REQUIRE(tsnn_config_parse(R"({
    "task": "mtsxor",
    "n_trials": 1,
    "network": {"hidden_layers": 2, "hidden_size": 4},
    "optim": {"epochs": 1, "batch_size": 32, "seed": 2},
    "data": {"mtsxor": {"train_samples": 32, "test_samples": 16, "seed": 4}}
  })",
                            &cfg.ptr) == TSNN_OK);
  char* summary = nullptr;
  REQUIRE(tsnn_run_sweep(cfg.ptr,
                         R"({"keys": ["hierarchy.delta_tau"], "grids": [[-0.1, 0.0, 0.1]]})",
                         tmp.file("sweep").c_str(), 3, &summary) == TSNN_OK);
  const std::string text(summary);
  tsnn_string_free(summary);
  CHECK(text.find("cells") != std::string::npos);
  CHECK(fs::exists(tmp.file("sweep") + "/sweep.csv"));
  CHECK(fs::exists(tmp.file("sweep") + "/cell_0/summary.json"));
  CHECK(fs::exists(tmp.file("sweep") + "/cell_2/trial_0/metrics.csv"));

  SUBCASE("malformed sweep spec") {
    CHECK(tsnn_run_sweep(cfg.ptr, R"({"keys": []})", tmp.file("s2").c_str(), 1, nullptr) ==
          TSNN_ERR_INVALID_ARGUMENT);
  }
}
