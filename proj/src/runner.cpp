#include "tsnn/runner.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "tsnn/checkpoint.hpp"
#include "tsnn/shd.hpp"
#include "tsnn/sim.hpp"
#include "tsnn/train.hpp"

namespace tsnn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// data preparation

struct PreparedData {
  SpikeDataset train_storage;
  SpikeDataset test_storage;
  TrainData view;  // pointers into the two storages
  int input_size = 0;
  int n_classes = 0;
};

void task_dims(const RunConfig& config, int& input_size, int& n_classes) {
  if (config.task == "mtsxor") {
    input_size = 2 * config.data.neurons_per_channel;
    n_classes = 2;
  } else if (config.task == "shd") {
    input_size = 700;
    n_classes = 20;
  } else if (config.task == "ssc") {
    input_size = 700;
    n_classes = 35;
  } else {
    input_size = 0;  // determined by the cache contents
    n_classes = 0;
  }
}

uint64_t dataset_seed(const RunConfig& config, uint64_t trial_seed) {
  return config.data.data_seed >= 0 ? static_cast<uint64_t>(config.data.data_seed)
                                    : derive_seed(trial_seed, {stream_tag::data});
}

PreparedData prepare_data(const RunConfig& config, uint64_t trial_seed) {
  PreparedData pd;
  if (config.task == "mtsxor") {
    const MtsXorConfig m = mtsxor_from_config(config);
    const uint64_t ds = dataset_seed(config, trial_seed);
    pd.train_storage = mtsxor_generate(m, config.data.train_samples, derive_seed(ds, {1}));
    pd.test_storage = mtsxor_generate(m, config.data.test_samples, derive_seed(ds, {2}));
  } else if (config.task == "shd" || config.task == "ssc") {
    if (config.data.path.empty() || config.data.test_path.empty())
      throw std::runtime_error("dataset missing: data.path and data.test_path must point to the "
                               "train/test event files");
    int input_size = 0, n_classes = 0;
    task_dims(config, input_size, n_classes);
    const SimGrid grid{config.network.dt, config.network.steps};
    pd.train_storage = load_shd(config.data.path, grid, input_size, n_classes);
    pd.test_storage = load_shd(config.data.test_path, grid, input_size, n_classes);
  } else if (config.task == "custom-cache") {
    if (config.data.path.empty() || config.data.test_path.empty())
      throw std::runtime_error("dataset missing: custom-cache needs data.path and data.test_path");
    pd.train_storage = read_cache(config.data.path);
    pd.test_storage = read_cache(config.data.test_path);
    for (SpikeDataset* ds : {&pd.train_storage, &pd.test_storage}) {
      ds->grid.dt = config.network.dt;
      if (ds->grid.steps != config.network.steps)
        throw std::runtime_error("cache grid mismatch: cache has T=" +
                                 std::to_string(ds->grid.steps) + ", config expects T=" +
                                 std::to_string(config.network.steps));
    }
    if (pd.train_storage.channels != pd.test_storage.channels)
      throw std::runtime_error("cache mismatch: train/test channel counts differ");
  } else {
    throw std::invalid_argument("unknown task '" + config.task + "'");
  }

  task_dims(config, pd.input_size, pd.n_classes);
  if (config.task == "custom-cache") {
    pd.input_size = pd.train_storage.channels;
    pd.n_classes = std::max(pd.train_storage.n_classes, pd.test_storage.n_classes);
  }

  pd.view.train_set = &pd.train_storage;
  pd.view.test_set = &pd.test_storage;
  pd.view.augment = config.data.augment;
  if (config.data.test_as_valid) {
    pd.view.valid_set = &pd.test_storage;
    pd.view.train_idx.resize(pd.train_storage.n_samples);
    for (int i = 0; i < pd.train_storage.n_samples; ++i) pd.view.train_idx[i] = i;
    pd.view.valid_idx.resize(pd.test_storage.n_samples);
    for (int i = 0; i < pd.test_storage.n_samples; ++i) pd.view.valid_idx[i] = i;
  } else {
    pd.view.valid_set = &pd.train_storage;
    Rng split_rng = Rng::stream(trial_seed, {stream_tag::split});
    split_train_valid(pd.train_storage.n_samples, config.data.valid_fraction, split_rng,
                      pd.view.train_idx, pd.view.valid_idx);
  }
  return pd;
}

std::vector<LayerParams> build_trial_params(const RunConfig& config, const NetworkSpec& spec,
                                            uint64_t trial_seed) {
  const std::vector<double> means = hidden_tau_means_from_config(config);
  Rng init_rng = Rng::stream(trial_seed, {stream_tag::init});
  return init_params(spec, means, config.hierarchy.tau_std_frac, init_rng);
}

// ---------------------------------------------------------------------------
// metrics serialization

void write_metrics_csv(const Metrics& metrics, bool train_tau, int n_hidden,
                       const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << "epoch,split,loss,accuracy,lr";
  if (train_tau) {
    for (int l = 1; l <= n_hidden; ++l)
      os << ",tau_median_" << l << ",tau_mean_" << l << ",tau_q25_" << l << ",tau_q75_" << l;
  }
  os << "\n";
  const auto row = [&](const EpochMetrics& em, const char* split, double loss, double acc) {
    os << em.epoch << ',' << split << ',' << fmt(loss) << ',' << fmt(acc) << ',' << fmt(em.lr);
    if (train_tau) {
      for (const auto& ts : em.tau)
        os << ',' << fmt(ts.median) << ',' << fmt(ts.mean) << ',' << fmt(ts.q25) << ','
           << fmt(ts.q75);
    }
    os << "\n";
  };
  for (const auto& em : metrics.epochs) {
    row(em, "train", em.train_loss, em.train_acc);
    row(em, "valid", em.valid_loss, em.valid_acc);
    row(em, "test", em.test_loss, em.test_acc);
  }
  if (!os) throw std::runtime_error("write failed for " + path);
}

json trial_json(int trial, uint64_t seed, const Metrics& m) {
  json jt;
  jt["trial"] = trial;
  jt["seed"] = seed;
  jt["best_epoch"] = m.best_epoch;
  jt["best_valid_acc"] = m.best_valid_acc;
  jt["test_acc"] = m.best_test_acc;
  jt["test_loss"] = m.best_test_loss;
  jt["wall_seconds"] = m.wall_seconds;
  if (!m.epochs.empty()) {
    jt["final_train_loss"] = m.epochs.back().train_loss;
    jt["final_train_acc"] = m.epochs.back().train_acc;
    const auto& best = m.epochs[std::min<size_t>(m.best_epoch, m.epochs.size() - 1)];
    if (!best.tau.empty()) {
      json medians = json::array();
      for (const auto& ts : best.tau) medians.push_back(ts.median);
      jt["tau_median_per_layer"] = medians;
    }
  }
  return jt;
}

json quartiles_json(std::vector<double> values) {
  json q;
  q["median"] = quantile(values, 0.5);
  q["q25"] = quantile(values, 0.25);
  q["q75"] = quantile(values, 0.75);
  return q;
}

}  // namespace

std::string run_train(const RunConfig& config, const std::string& out_dir_override, int jobs) {
  const std::string out_dir = out_dir_override.empty() ? config.out_dir : out_dir_override;
  fs::create_directories(out_dir);
  {
    std::ofstream os(out_dir + "/config.json", std::ios::trunc);
    os << dump_config(config) << "\n";
  }

  json summary;
  summary["task"] = config.task;
  summary["n_trials"] = config.n_trials;
  json trials = json::array();
  std::vector<double> test_accs, valid_accs;

  for (int trial = 0; trial < config.n_trials; ++trial) {
    const uint64_t trial_seed = config.optim.seed + static_cast<uint64_t>(trial);
    const std::string trial_dir = out_dir + "/trial_" + std::to_string(trial);
    fs::create_directories(trial_dir);

    PreparedData pd = prepare_data(config, trial_seed);
    const NetworkSpec spec = network_spec_from_config(config, pd.input_size, pd.n_classes);
    std::vector<LayerParams> params = build_trial_params(config, spec, trial_seed);

    OptimSpec optim = config.optim;
    optim.seed = trial_seed;
    const LossKind loss = parse_loss_kind(config.loss);

    TrainResult result = train(spec, std::move(params), optim, loss, pd.view, jobs);

    write_metrics_csv(result.metrics, optim.train_tau, spec.n_hidden(),
                      trial_dir + "/metrics.csv");
    Checkpoint ck;
    ck.spec = spec;
    ck.params = result.params;
    ck.has_optim = true;
    ck.optim = result.optim;
    save_checkpoint(ck, trial_dir + "/checkpoint.tsnn");

    trials.push_back(trial_json(trial, trial_seed, result.metrics));
    test_accs.push_back(result.metrics.best_test_acc);
    valid_accs.push_back(result.metrics.best_valid_acc);
  }

  summary["trials"] = trials;
  summary["test_acc"] = quartiles_json(test_accs);
  summary["valid_acc"] = quartiles_json(valid_accs);
  summary["config"] = json::parse(dump_config(config));

  const std::string text = summary.dump(2);
  std::ofstream os(out_dir + "/summary.json", std::ios::trunc);
  os << text << "\n";
  if (!os) throw std::runtime_error("write failed for " + out_dir + "/summary.json");
  return text;
}

std::string run_eval(const std::string& checkpoint_path, const RunConfig& config, int jobs) {
  const Checkpoint ck = load_checkpoint(checkpoint_path);
  const uint64_t trial_seed = config.optim.seed;
  PreparedData pd = prepare_data(config, trial_seed);
  const NetworkSpec expect = network_spec_from_config(config, pd.input_size, pd.n_classes);

  const auto mismatch = [&](const std::string& what) {
    throw std::runtime_error("checkpoint/config spec mismatch: " + what);
  };
  if (ck.spec.input_size != expect.input_size) mismatch("input size");
  if (ck.spec.output_size != expect.output_size) mismatch("output size");
  if (ck.spec.grid.steps != expect.grid.steps || ck.spec.grid.dt != expect.grid.dt)
    mismatch("simulation grid");
  if (ck.spec.hidden.size() != expect.hidden.size()) mismatch("hidden layer count");
  for (size_t l = 0; l < expect.hidden.size(); ++l) {
    if (ck.spec.hidden[l].size != expect.hidden[l].size ||
        ck.spec.hidden[l].kind != expect.hidden[l].kind)
      mismatch("hidden layer " + std::to_string(l));
  }

  std::vector<int> test_idx(pd.test_storage.n_samples);
  for (int i = 0; i < pd.test_storage.n_samples; ++i) test_idx[i] = i;
  const auto [acc, loss] = evaluate(ck.spec, ck.params, pd.test_storage, test_idx,
                                    parse_loss_kind(config.loss), jobs);
  json out;
  out["checkpoint"] = checkpoint_path;
  out["test_accuracy"] = acc;
  out["test_loss"] = loss;
  return out.dump(2);
}

// ---------------------------------------------------------------------------
// gradcheck

namespace {

struct GradCase {
  NetworkSpec spec;
  std::vector<LayerParams> params;
  std::vector<std::vector<double>> inputs;        // batch of input tensors
  std::vector<int> labels;                        // sum/double-softmax losses
  std::vector<std::vector<Window>> windows;       // max loss
  LossKind loss = LossKind::sum_softmax;
};

double case_loss(const GradCase& gc, const std::vector<LayerParams>& params, double beta) {
  ForwardOptions fwd;
  fwd.mode = SpikeMode::relaxed;
  fwd.surrogate_beta = beta;
  double total = 0.0;
  for (size_t b = 0; b < gc.inputs.size(); ++b) {
    const auto out = forward_pass(gc.spec, params, gc.inputs[b], fwd, nullptr);
    const int T = gc.spec.grid.steps;
    const int n_out = gc.spec.output_size;
    if (gc.loss == LossKind::max_over_windows)
      total += loss_max_windows(out, T, n_out, gc.windows[b]);
    else
      total += loss_sum(out, T, n_out, gc.labels[b]);
  }
  return total / static_cast<double>(gc.inputs.size());
}

// Checks the relaxed trajectory keeps clear of the surrogate box edges, where
// the loss is only piecewise differentiable.
bool trajectory_clear(const Tape& tape, const std::vector<LayerParams>& params, double beta,
                      double delta) {
  for (size_t l = 0; l + 1 < tape.layers.size(); ++l) {
    for (double u : tape.layers[l].voltage) {
      if (std::abs(std::abs(u - params[l].u_th) - beta) < delta) return false;
    }
  }
  return true;
}

// The max-over-windows loss is non-smooth where the within-window argmax
// switches steps; finite differences are only valid away from such ties.
bool windows_tie_free(std::span<const double> out, int n_out,
                      std::span<const Window> windows, double margin) {
  for (const auto& w : windows) {
    for (int n = 0; n < n_out; ++n) {
      double best = -std::numeric_limits<double>::infinity(), second = best;
      for (int t = w.start; t < w.end; ++t) {
        const double v = out[static_cast<size_t>(t) * n_out + n];
        if (v > best) {
          second = best;
          best = v;
        } else if (v > second) {
          second = v;
        }
      }
      if (w.end - w.start > 1 && best - second < margin) return false;
    }
  }
  return true;
}

GradCase make_case(const RunConfig& config, int input_size, int n_classes, uint64_t case_seed,
                   int batch) {
  GradCase gc;
  gc.spec = network_spec_from_config(config, input_size, n_classes);
  // enough steps for every dilated receptive field to fill with live input
  int rf = 0;
  for (const auto& h : gc.spec.hidden) rf += (h.kernel_size - 1) * h.dilation;
  gc.spec.grid.steps = std::max(gc.spec.grid.steps, rf + 8);
  Rng rng = Rng::stream(case_seed, {0x6763ull});

  // Weights are drawn wider than Xavier and with a positive offset so
  // membrane voltages wander around the threshold and the surrogate box is
  // actually visited in every layer.
  gc.params.resize(gc.spec.hidden.size() + 1);
  int in_size = input_size;
  for (size_t l = 0; l < gc.spec.hidden.size(); ++l) {
    LayerParams& p = gc.params[l];
    const LayerSpec& ls = gc.spec.hidden[l];
    p.kind = ls.kind;
    p.in_size = in_size;
    p.out_size = ls.size;
    p.kernel_size = ls.kind == LayerKind::conv ? ls.kernel_size : 1;
    p.dilation = ls.kind == LayerKind::conv ? ls.dilation : 1;
    p.spiking = true;
    p.weights.resize(p.weight_count());
    const double fan = static_cast<double>(p.kernel_size) * in_size;
    const double bound = 3.0 / std::sqrt(fan);
    const double mean_in = l == 0 ? 1.0 : 0.4;  // input counts vs soft spike rates
    const double shift = 1.3 / (mean_in * fan);
    for (auto& w : p.weights) w = shift + rng.uniform(-bound, bound);
    p.tau.resize(ls.size);
    for (auto& t : p.tau) t = rng.uniform(0.03, 0.15);
    in_size = ls.size;
  }
  LayerParams& out = gc.params.back();
  out.kind = LayerKind::dense;
  out.in_size = in_size;
  out.out_size = gc.spec.output_size;
  out.spiking = false;
  out.weights.resize(out.weight_count());
  // positive readout weights keep every output trace away from flat zero,
  // which would otherwise produce windowed-max ties
  const double bound = 2.0 / std::sqrt(static_cast<double>(in_size));
  for (auto& w : out.weights) w = rng.uniform(0.05 * bound, bound);
  out.tau.assign(gc.spec.output_size, gc.spec.tau_out);

  const int T = gc.spec.grid.steps;
  for (int b = 0; b < batch; ++b) {
    std::vector<double> input(static_cast<size_t>(T) * input_size);
    for (auto& x : input) x = static_cast<double>(rng.poisson(1.0));
    gc.inputs.push_back(std::move(input));
    gc.labels.push_back(static_cast<int>(rng.uniform_int(n_classes)));
    // two disjoint windows in the tail, past the receptive-field warmup
    std::vector<Window> wins;
    const int mid = std::max(1, T - 6);
    const int split = std::max(mid + 1, T - 3);
    wins.push_back({mid, split, static_cast<int>(rng.uniform_int(n_classes))});
    wins.push_back({split, T, static_cast<int>(rng.uniform_int(n_classes))});
    gc.windows.push_back(std::move(wins));
  }
  return gc;
}

}  // namespace

GradCheckResult run_gradcheck(const RunConfig& config, int n_cases, int jobs) {
  (void)jobs;  // cases are cheap; kept serial for reproducible reports
  int input_size = 0, n_classes = 0;
  task_dims(config, input_size, n_classes);
  if (input_size == 0) {
    input_size = 8;
    n_classes = 2;
  }
  {
    const NetworkSpec probe = network_spec_from_config(config, input_size, n_classes);
    size_t n_params = 0;
    Rng tmp(1);
    for (const auto& p :
         init_params(probe, std::vector<double>(probe.hidden.size(), config.hierarchy.tau_mean),
                     0.0, tmp))
      n_params += p.weight_count() + p.tau.size();
    if (n_params > 2000)
      throw std::invalid_argument("gradcheck: network too large (" + std::to_string(n_params) +
                                  " parameters, limit 2000); use a toy config");
  }

  const double beta = config.optim.surrogate_beta;
  const double tol_w = 1e-5, tol_tau = 1e-4;
  const double edge_delta = 1e-3;
  const double fd_eps = 1e-5;

  double max_rel_w = 0.0, max_rel_tau = 0.0;
  bool tiny_ok = true;
  std::vector<std::string> failures;

  json worst_w = json::array({0.0, 0.0});
  json worst_t = json::array({0.0, 0.0});
  for (int c = 0; c < n_cases; ++c) {
    GradCase gc;
    Gradients bptt;
    BackwardOptions bwd;
    bwd.train_tau = true;
    bwd.reset_grad = config.optim.reset_grad;
    bool usable = false;
    std::string why = "could not draw a usable case";

    for (int attempt = 0; attempt < 300 && !usable; ++attempt) {
      gc = make_case(config, input_size, n_classes,
                     derive_seed(config.optim.seed, {0x6772ull, static_cast<uint64_t>(c),
                                                     static_cast<uint64_t>(attempt)}),
                     2);
      gc.loss = c % 2 == 0 ? LossKind::sum_softmax : LossKind::max_over_windows;
      std::vector<Tape> tapes(gc.inputs.size());
      ForwardOptions fwd;
      fwd.record = true;
      fwd.mode = SpikeMode::relaxed;
      fwd.surrogate_beta = beta;
      bool clear = true;
      for (size_t b = 0; b < gc.inputs.size(); ++b) {
        forward_pass(gc.spec, gc.params, gc.inputs[b], fwd, &tapes[b]);
        if (beta > 0.0 && !trajectory_clear(tapes[b], gc.params, beta, edge_delta)) {
          clear = false;
          why = "could not draw a trajectory clear of the surrogate box edges";
          break;
        }
        // a tie needs |v1-v2| < eps * d|v1-v2|/dtheta to flip under the FD
        // probe; 1e-4 bounds that with margin for O(10) sensitivities
        if (gc.loss == LossKind::max_over_windows &&
            !windows_tie_free(tapes[b].layers.back().voltage, gc.spec.output_size,
                              gc.windows[b], 1e-4)) {
          clear = false;
          why = "could not draw tie-free window maxima for the max loss";
          break;
        }
      }
      if (!clear) continue;

      bptt.resize_like(gc.params);
      std::vector<double> dL_dout;
      for (size_t b = 0; b < gc.inputs.size(); ++b) {
        const auto& out = tapes[b].layers.back().voltage;
        dL_dout.assign(out.size(), 0.0);
        const int T = gc.spec.grid.steps;
        if (gc.loss == LossKind::max_over_windows)
          loss_max_windows_grad(out, T, gc.spec.output_size, gc.windows[b], dL_dout);
        else
          loss_sum_grad(out, T, gc.spec.output_size, gc.labels[b], dL_dout);
        backward_pass(tapes[b], gc.params, dL_dout, bwd, bptt, /*accumulate=*/true);
      }
      bptt.scale(1.0 / static_cast<double>(gc.inputs.size()));

      bool flow = true;
      for (size_t l = 0; l + 1 < gc.params.size(); ++l) {
        double peak = 0.0;
        for (double g : bptt.weights[l]) peak = std::max(peak, std::abs(g));
        if (peak == 0.0) flow = false;
      }
      if (!flow) {
        why = "no surrogate gradient flow through a hidden layer";
        if (beta <= 0.0) break;  // a dead surrogate cannot recover; report it
        continue;
      }
      usable = true;
    }
    if (!usable) {
      failures.push_back("case " + std::to_string(c) + ": " + why);
      continue;
    }

    const GradCase& gc_ref = gc;
    const Gradients fd = finite_difference_gradient(
        gc.spec, gc.params,
        [&gc_ref, beta](const std::vector<LayerParams>& p) { return case_loss(gc_ref, p, beta); },
        fd_eps, /*include_tau=*/true);

    const GradCompare cmp = compare_gradients(bptt, fd);
    if (cmp.max_rel_weights > max_rel_w) {
      max_rel_w = cmp.max_rel_weights;
      worst_w = json::array({cmp.worst_weights[0], cmp.worst_weights[1]});
    }
    if (cmp.max_rel_tau > max_rel_tau) {
      max_rel_tau = cmp.max_rel_tau;
      worst_t = json::array({cmp.worst_tau[0], cmp.worst_tau[1]});
    }
    tiny_ok = tiny_ok && cmp.tiny_ok;
  }

  const bool pass =
      failures.empty() && tiny_ok && max_rel_w <= tol_w && max_rel_tau <= tol_tau;
  json report;
  report["cases"] = n_cases;
  report["surrogate_beta"] = beta;
  report["max_rel_error_weights"] = max_rel_w;
  report["max_rel_error_tau"] = max_rel_tau;
  report["worst_weight_pair_bptt_fd"] = worst_w;
  report["worst_tau_pair_bptt_fd"] = worst_t;
  report["tolerance_weights"] = tol_w;
  report["tolerance_tau"] = tol_tau;
  report["tiny_gradients_consistent"] = tiny_ok;
  report["failures"] = failures;
  report["pass"] = pass;
  return {pass, report.dump(2)};
}

// ---------------------------------------------------------------------------
// sweep

std::string run_sweep(const RunConfig& config, const std::string& sweep_json_text,
                      const std::string& out_dir_override, int jobs) {
  json sweep;
  try {
    sweep = json::parse(sweep_json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("sweep spec parse error: ") + e.what());
  }
  if (!sweep.contains("keys") || !sweep.contains("grids"))
    throw std::invalid_argument("sweep spec needs 'keys' and 'grids'");
  const auto keys = sweep["keys"].get<std::vector<std::string>>();
  const auto grids = sweep["grids"].get<std::vector<std::vector<json>>>();
  if (keys.empty() || keys.size() > 2 || keys.size() != grids.size())
    throw std::invalid_argument("sweep spec: one or two keys, one grid per key");
  for (const auto& g : grids)
    if (g.empty()) throw std::invalid_argument("sweep spec: empty grid");

  const std::string out_dir = out_dir_override.empty() ? config.out_dir : out_dir_override;
  fs::create_directories(out_dir);

  struct Cell {
    std::vector<json> values;
    std::string dir;
    RunConfig config;
    double median = 0.0, q25 = 0.0, q75 = 0.0;
  };
  std::vector<Cell> cells;
  const size_t n0 = grids[0].size();
  const size_t n1 = keys.size() == 2 ? grids[1].size() : 1;
  for (size_t i = 0; i < n0; ++i) {
    for (size_t j = 0; j < n1; ++j) {
      Cell cell;
      cell.values.push_back(grids[0][i]);
      cell.config = config;
      set_config_key(cell.config, keys[0], grids[0][i].dump());
      cell.dir = out_dir + "/cell_" + std::to_string(i);
      if (keys.size() == 2) {
        cell.values.push_back(grids[1][j]);
        set_config_key(cell.config, keys[1], grids[1][j].dump());
        cell.dir += "_" + std::to_string(j);
      }
      cells.push_back(std::move(cell));
    }
  }

  const bool has_baseline = sweep.contains("baseline");
  RunConfig baseline_config = config;
  if (has_baseline) {
    for (auto it = sweep["baseline"].begin(); it != sweep["baseline"].end(); ++it)
      set_config_key(baseline_config, it.key(), it.value().dump());
  }

  // Cells are isolated runs; parallelize across them and keep each cell
  // single-threaded unless there is only one.
  const int cell_jobs = cells.size() > 1 ? 1 : jobs;
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(cells.size())));
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const size_t c = next.fetch_add(1);
      if (c >= cells.size()) return;
      try {
        const std::string text = run_train(cells[c].config, cells[c].dir, cell_jobs);
        const json summary = json::parse(text);
        cells[c].median = summary["test_acc"]["median"].get<double>();
        cells[c].q25 = summary["test_acc"]["q25"].get<double>();
        cells[c].q75 = summary["test_acc"]["q75"].get<double>();
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  double baseline_median = 0.0;
  if (has_baseline) {
    const json base = json::parse(run_train(baseline_config, out_dir + "/baseline", jobs));
    baseline_median = base["test_acc"]["median"].get<double>();
  }

  // sweep.csv: one row per cell, fixed column order
  {
    std::ofstream os(out_dir + "/sweep.csv", std::ios::trunc);
    os << keys[0];
    if (keys.size() == 2) os << ',' << keys[1];
    os << ",test_acc_median,test_acc_q25,test_acc_q75";
    if (has_baseline) os << ",delta_median_vs_baseline";
    os << "\n";
    for (const auto& cell : cells) {
      os << cell.values[0].dump();
      if (keys.size() == 2) os << ',' << cell.values[1].dump();
      os << ',' << fmt(cell.median) << ',' << fmt(cell.q25) << ',' << fmt(cell.q75);
      if (has_baseline) os << ',' << fmt(cell.median - baseline_median);
      os << "\n";
    }
    if (!os) throw std::runtime_error("write failed for " + out_dir + "/sweep.csv");
  }

  json summary;
  summary["keys"] = keys;
  json rows = json::array();
  for (const auto& cell : cells) {
    json row;
    row["values"] = cell.values;
    row["dir"] = cell.dir;
    row["test_acc_median"] = cell.median;
    row["test_acc_q25"] = cell.q25;
    row["test_acc_q75"] = cell.q75;
    if (has_baseline) row["delta_median_vs_baseline"] = cell.median - baseline_median;
    rows.push_back(std::move(row));
  }
  summary["cells"] = rows;
  if (has_baseline) summary["baseline_test_acc_median"] = baseline_median;
  const std::string text = summary.dump(2);
  std::ofstream os(out_dir + "/summary.json", std::ios::trunc);
  os << text << "\n";
  if (!os) throw std::runtime_error("write failed for " + out_dir + "/summary.json");
  return text;
}

void generate_mtsxor_cache(const RunConfig& config, const std::string& out_path) {
  if (config.task != "mtsxor")
    throw std::invalid_argument("gen-mtsxor: config task must be 'mtsxor'");
  const MtsXorConfig m = mtsxor_from_config(config);
  const uint64_t ds = dataset_seed(config, config.optim.seed);
  fs::create_directories(out_path);
  write_cache(mtsxor_generate(m, config.data.train_samples, derive_seed(ds, {1})),
              out_path + "/mtsxor_train.tsnc");
  write_cache(mtsxor_generate(m, config.data.test_samples, derive_seed(ds, {2})),
              out_path + "/mtsxor_test.tsnc");
}

}  // namespace tsnn
