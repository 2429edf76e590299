#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tsnn/dataset.hpp"
#include "tsnn/grad.hpp"
#include "tsnn/loss.hpp"
#include "tsnn/network.hpp"
#include "tsnn/optim.hpp"

namespace tsnn {

// Sub-stream tags for deriving independent RNG streams from a run seed.
namespace stream_tag {
inline constexpr uint64_t init = 1;
inline constexpr uint64_t data = 2;
inline constexpr uint64_t shuffle = 3;
inline constexpr uint64_t dropout = 4;
inline constexpr uint64_t augment = 5;
inline constexpr uint64_t split = 6;
}  // namespace stream_tag

struct TauSummary {
  double median = 0.0;
  double mean = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
};

TauSummary summarize_taus(std::span<const double> taus);

// Quantile with linear interpolation between order statistics (sorts a copy).
double quantile(std::vector<double> values, double p);

struct EpochMetrics {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0, train_acc = 0.0;
  double valid_loss = 0.0, valid_acc = 0.0;
  double test_loss = 0.0, test_acc = 0.0;
  std::vector<TauSummary> tau;  // per hidden layer, only when train_tau
};

struct Metrics {
  std::vector<EpochMetrics> epochs;
  int best_epoch = 0;
  double best_valid_acc = 0.0;
  double best_test_acc = 0.0;
  double best_test_loss = 0.0;
  double wall_seconds = 0.0;  // reported in summaries, never in the CSV
};

// Dataset views used by one training run. train_idx/valid_idx select samples
// from train_set/valid_set; the whole test_set is evaluated.
struct TrainData {
  const SpikeDataset* train_set = nullptr;
  const SpikeDataset* valid_set = nullptr;  // either train_set or test_set
  const SpikeDataset* test_set = nullptr;
  std::vector<int> train_idx;
  std::vector<int> valid_idx;
  bool augment = false;
};

// Shuffles [0, n) with the given rng and carves off valid_fraction for
// validation (last part of the shuffle).
void split_train_valid(int n, double valid_fraction, Rng& rng, std::vector<int>& train_idx,
                       std::vector<int>& valid_idx);

struct TrainResult {
  std::vector<LayerParams> params;  // best-validation parameters
  AdamState optim;                  // optimizer state at the best epoch
  Metrics metrics;
};

// Mini-batch surrogate-gradient training. Deterministic given (spec, params,
// optim.seed) for any jobs count: batches are split into fixed-size chunks,
// each chunk accumulates sample gradients in order, and chunks are reduced in
// index order. Throws on divergence (non-finite loss) with epoch/batch info.
TrainResult train(const NetworkSpec& spec, std::vector<LayerParams> params,
                  const OptimSpec& optim, LossKind loss, const TrainData& data, int jobs = 1);

// Accuracy/loss over the selected samples; prediction is argmax of the
// time-summed log-softmax (per-sample labels) or the windowed max voltage
// (per-window labels). Side-effect free and deterministic.
std::pair<double, double> evaluate(const NetworkSpec& spec,
                                   const std::vector<LayerParams>& params,
                                   const SpikeDataset& ds, std::span<const int> indices,
                                   LossKind loss, int jobs = 1);

}  // namespace tsnn
