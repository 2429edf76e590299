#include "tsnn/train.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>

#include "tsnn/sim.hpp"

namespace tsnn {

namespace {

// Batch samples are processed in fixed chunks of this size and reduced in
// chunk order, so results do not depend on the worker count.
constexpr int kChunkSize = 8;

void parallel_chunks(int n_chunks, int jobs, const std::function<void(int)>& fn) {
  if (n_chunks <= 0) return;
  jobs = std::max(1, std::min(jobs, n_chunks));
  if (jobs == 1) {
    for (int c = 0; c < n_chunks; ++c) fn(c);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const int c = next.fetch_add(1);
      if (c >= n_chunks) return;
      try {
        fn(c);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(jobs);
  for (int i = 0; i < jobs; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

struct SampleEval {
  double loss = 0.0;
  int correct = 0;
  int units = 0;
};

// Forward + loss (+ gradient of the loss w.r.t. the output trace if dL_dout
// is non-null) for one sample.
SampleEval eval_sample(const NetworkSpec& spec, const std::vector<LayerParams>& params,
                       const SpikeDataset& ds, int index, LossKind loss,
                       const ForwardOptions& fwd, Tape* tape, std::vector<double>* dL_dout,
                       std::span<const double> input) {
  const std::vector<double> out = forward_pass(spec, params, input, fwd, tape);
  const int T = spec.grid.steps;
  const int n_out = spec.output_size;
  SampleEval ev;
  if (ds.per_window) {
    if (loss != LossKind::max_over_windows)
      throw std::invalid_argument("per-window labels require the max-over-windows loss");
    const auto& wins = ds.windows[index];
    ev.loss = loss_max_windows(out, T, n_out, wins);
    for (const auto& w : wins) {
      ev.correct += predict_window(out, T, n_out, w) == w.label ? 1 : 0;
      ++ev.units;
    }
    if (dL_dout) {
      dL_dout->assign(out.size(), 0.0);
      loss_max_windows_grad(out, T, n_out, wins, *dL_dout);
    }
  } else {
    const int label = static_cast<int>(ds.labels[index]);
    if (loss == LossKind::max_over_windows)
      throw std::invalid_argument("max-over-windows loss requires per-window labels");
    if (loss == LossKind::double_softmax) {
      ev.loss = loss_double_softmax(out, T, n_out, label);
      if (dL_dout) {
        dL_dout->assign(out.size(), 0.0);
        loss_double_softmax_grad(out, T, n_out, label, *dL_dout);
      }
    } else {
      ev.loss = loss_sum(out, T, n_out, label);
      if (dL_dout) {
        dL_dout->assign(out.size(), 0.0);
        loss_sum_grad(out, T, n_out, label, *dL_dout);
      }
    }
    ev.correct = predict_sum(out, T, n_out) == label ? 1 : 0;
    ev.units = 1;
  }
  return ev;
}

void to_double(std::span<const uint8_t> in, std::vector<double>& out) {
  out.resize(in.size());
  for (size_t i = 0; i < in.size(); ++i) out[i] = static_cast<double>(in[i]);
}

}  // namespace

double quantile(std::vector<double> values, double p) {
  const size_t n = values.size();
  if (n == 0) return 0.0;
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(n) - 1.0) * p;
  const auto lo = static_cast<size_t>(h);
  if (lo + 1 >= n) return values[n - 1];
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

TauSummary summarize_taus(std::span<const double> taus) {
  TauSummary s;
  if (taus.empty()) return s;
  std::vector<double> v(taus.begin(), taus.end());
  for (double t : v) s.mean += t;
  s.mean /= static_cast<double>(v.size());
  s.median = quantile(v, 0.5);
  s.q25 = quantile(v, 0.25);
  s.q75 = quantile(std::move(v), 0.75);
  return s;
}

void split_train_valid(int n, double valid_fraction, Rng& rng, std::vector<int>& train_idx,
                       std::vector<int>& valid_idx) {
  if (!(valid_fraction >= 0.0 && valid_fraction < 1.0))
    throw std::invalid_argument("split_train_valid: fraction must be in [0, 1)");
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  for (int i = n - 1; i > 0; --i)
    std::swap(order[i], order[rng.uniform_int(static_cast<uint64_t>(i) + 1)]);
  const int n_valid = static_cast<int>(std::lround(valid_fraction * n));
  train_idx.assign(order.begin(), order.end() - n_valid);
  valid_idx.assign(order.end() - n_valid, order.end());
}

std::pair<double, double> evaluate(const NetworkSpec& spec,
                                   const std::vector<LayerParams>& params,
                                   const SpikeDataset& ds, std::span<const int> indices,
                                   LossKind loss, int jobs) {
  if (indices.empty()) return {0.0, 0.0};
  const int n = static_cast<int>(indices.size());
  const int n_chunks = (n + kChunkSize - 1) / kChunkSize;
  std::vector<SampleEval> partial(n_chunks);
  parallel_chunks(n_chunks, jobs, [&](int c) {
    std::vector<double> input;
    SampleEval acc;
    const int begin = c * kChunkSize;
    const int end = std::min(n, begin + kChunkSize);
    for (int i = begin; i < end; ++i) {
      const int idx = indices[i];
      to_double(ds.sample(idx), input);
      const SampleEval ev =
          eval_sample(spec, params, ds, idx, loss, ForwardOptions{}, nullptr, nullptr, input);
      acc.loss += ev.loss;
      acc.correct += ev.correct;
      acc.units += ev.units;
    }
    partial[c] = acc;
  });
  SampleEval total;
  for (const auto& p : partial) {
    total.loss += p.loss;
    total.correct += p.correct;
    total.units += p.units;
  }
  const double acc = total.units > 0 ? static_cast<double>(total.correct) / total.units : 0.0;
  const double mean_loss = n > 0 ? total.loss / n : 0.0;
  return {acc, mean_loss};
}

TrainResult train(const NetworkSpec& spec, std::vector<LayerParams> params,
                  const OptimSpec& optim, LossKind loss, const TrainData& data, int jobs) {
  const auto t_start = std::chrono::steady_clock::now();
  optim.validate();
  check_params_match(spec, params);
  if (!data.train_set || !data.valid_set || !data.test_set)
    throw std::invalid_argument("train: train/valid/test datasets must all be provided");

  const SpikeDataset& train_set = *data.train_set;
  std::vector<int> test_idx(data.test_set->n_samples);
  for (int i = 0; i < data.test_set->n_samples; ++i) test_idx[i] = i;

  AdamState adam;
  adam.resize_like(params);

  TrainResult result;
  Metrics& metrics = result.metrics;
  std::vector<LayerParams> best_params = params;
  AdamState best_optim = adam;
  double best_valid = -1.0;
  int best_epoch = 0;
  double best_test_acc = 0.0, best_test_loss = 0.0;

  const double tau_floor = spec.grid.tau_floor();
  const int n_train = static_cast<int>(data.train_idx.size());
  if (optim.epochs > 0 && n_train == 0) throw std::invalid_argument("train: empty training split");

  const auto record_epoch = [&](int epoch, double lr, double train_loss, double train_acc) {
    EpochMetrics em;
    em.epoch = epoch;
    em.lr = lr;
    em.train_loss = train_loss;
    em.train_acc = train_acc;
    std::tie(em.valid_acc, em.valid_loss) =
        evaluate(spec, params, *data.valid_set, data.valid_idx, loss, jobs);
    std::tie(em.test_acc, em.test_loss) =
        evaluate(spec, params, *data.test_set, test_idx, loss, jobs);
    if (optim.train_tau) {
      for (size_t l = 0; l + 1 < params.size(); ++l)
        em.tau.push_back(summarize_taus(params[l].tau));
    }
    if (em.valid_acc > best_valid) {
      best_valid = em.valid_acc;
      best_epoch = epoch;
      best_params = params;
      best_optim = adam;
      best_test_acc = em.test_acc;
      best_test_loss = em.test_loss;
    }
    metrics.epochs.push_back(std::move(em));
  };

  if (optim.epochs == 0) {
    auto [train_acc, train_loss] =
        evaluate(spec, params, train_set, data.train_idx, loss, jobs);
    record_epoch(0, optim.learning_rate(0), train_loss, train_acc);
  }

  std::vector<int> order(data.train_idx);
  for (int epoch = 0; epoch < optim.epochs; ++epoch) {
    const double lr = optim.learning_rate(epoch);
    Rng shuffle_rng = Rng::stream(optim.seed, {stream_tag::shuffle, static_cast<uint64_t>(epoch)});
    for (int i = n_train - 1; i > 0; --i)
      std::swap(order[i], order[shuffle_rng.uniform_int(static_cast<uint64_t>(i) + 1)]);

    double epoch_loss = 0.0;
    long epoch_correct = 0, epoch_units = 0;
    int n_batches = 0;

    for (int batch_begin = 0; batch_begin < n_train; batch_begin += optim.batch_size) {
      const int batch_n = std::min(optim.batch_size, n_train - batch_begin);
      const int n_chunks = (batch_n + kChunkSize - 1) / kChunkSize;
      std::vector<Gradients> chunk_grads(n_chunks);
      std::vector<SampleEval> chunk_eval(n_chunks);

      parallel_chunks(n_chunks, jobs, [&](int c) {
        Gradients& grads = chunk_grads[c];
        grads.resize_like(params);
        SampleEval acc;
        Tape tape;
        std::vector<double> input, dL_dout;
        std::vector<uint8_t> augmented;
        const int begin = batch_begin + c * kChunkSize;
        const int end = std::min(batch_begin + batch_n, begin + kChunkSize);
        for (int i = begin; i < end; ++i) {
          const int idx = order[i];
          std::span<const uint8_t> raw = train_set.sample(idx);
          if (data.augment) {
            Rng aug_rng = Rng::stream(optim.seed, {stream_tag::augment,
                                                   static_cast<uint64_t>(epoch),
                                                   static_cast<uint64_t>(idx)});
            augmented =
                augment_freq_shift(raw, spec.grid.steps, train_set.channels, aug_rng);
            raw = augmented;
          }
          to_double(raw, input);

          ForwardOptions fwd;
          fwd.record = true;
          fwd.surrogate_beta = optim.surrogate_beta;
          DropoutPlan plan;
          if (optim.dropout_p > 0.0) {
            Rng drop_rng = Rng::stream(optim.seed, {stream_tag::dropout,
                                                    static_cast<uint64_t>(epoch),
                                                    static_cast<uint64_t>(idx)});
            plan = make_dropout_plan(spec, optim.dropout_p, drop_rng);
            fwd.dropout = &plan;
          }
          const SampleEval ev =
              eval_sample(spec, params, train_set, idx, loss, fwd, &tape, &dL_dout, input);
          acc.loss += ev.loss;
          acc.correct += ev.correct;
          acc.units += ev.units;

          BackwardOptions bwd;
          bwd.train_tau = optim.train_tau;
          bwd.reset_grad = optim.reset_grad;
          backward_pass(tape, params, dL_dout, bwd, grads, /*accumulate=*/true);
        }
        chunk_eval[c] = acc;
      });

      Gradients batch_grads = std::move(chunk_grads[0]);
      SampleEval batch_eval = chunk_eval[0];
      for (int c = 1; c < n_chunks; ++c) {
        batch_grads.add_scaled(1.0, chunk_grads[c]);
        batch_eval.loss += chunk_eval[c].loss;
        batch_eval.correct += chunk_eval[c].correct;
        batch_eval.units += chunk_eval[c].units;
      }
      if (!std::isfinite(batch_eval.loss))
        throw std::runtime_error("training diverged (non-finite loss) at epoch " +
                                 std::to_string(epoch) + ", batch " +
                                 std::to_string(n_batches));
      batch_grads.scale(1.0 / batch_n);
      if (optim.train_tau && optim.tau_reg_coeff > 0.0) {
        for (size_t l = 0; l + 1 < params.size(); ++l)
          tau_regularizer_grad(params[l].tau, optim.tau_reg_coeff, batch_grads.tau[l]);
      }
      optimizer_step(params, batch_grads, adam, epoch, optim, tau_floor);

      epoch_loss += batch_eval.loss;
      epoch_correct += batch_eval.correct;
      epoch_units += batch_eval.units;
      ++n_batches;
    }

    const double train_loss = n_train > 0 ? epoch_loss / n_train : 0.0;
    const double train_acc =
        epoch_units > 0 ? static_cast<double>(epoch_correct) / epoch_units : 0.0;
    record_epoch(epoch, lr, train_loss, train_acc);
  }

  metrics.best_epoch = best_epoch;
  metrics.best_valid_acc = std::max(best_valid, 0.0);
  metrics.best_test_acc = best_test_acc;
  metrics.best_test_loss = best_test_loss;
  metrics.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  result.params = std::move(best_params);
  result.optim = std::move(best_optim);
  return result;
}

}  // namespace tsnn
