#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tsnn/network.hpp"
#include "tsnn/rng.hpp"

namespace tsnn {

// Ring buffer over the past input rows of a conv layer. Zero-filled at
// sequence start, which realizes causal left padding of (K-1)*d zeros.
template <typename Real>
class RingHistoryT {
 public:
  void reset(int width, int capacity) {
    width_ = width;
    capacity_ = capacity;
    head_ = -1;
    data_.assign(static_cast<size_t>(width) * capacity, Real(0));
  }

  void push(std::span<const Real> row) {
    head_ = (head_ + 1) % capacity_;
    Real* dst = data_.data() + static_cast<size_t>(head_) * width_;
    for (int i = 0; i < width_; ++i) dst[i] = row[i];
  }

  // Row steps_back pushes ago; lag(0) is the most recently pushed row.
  std::span<const Real> lag(int steps_back) const {
    const int idx = ((head_ - steps_back) % capacity_ + capacity_) % capacity_;
    return {data_.data() + static_cast<size_t>(idx) * width_, static_cast<size_t>(width_)};
  }

  int capacity() const { return capacity_; }

 private:
  std::vector<Real> data_;
  int width_ = 0;
  int capacity_ = 0;
  int head_ = -1;
};

using RingHistory = RingHistoryT<double>;

// Per-layer mutable simulation state.
struct LayerState {
  std::vector<double> u;  // membrane voltage
  std::vector<double> s;  // spike output of the current step
  RingHistory history;    // conv layers only

  void reset(const LayerParams& p);
};

// f(I, W) for a dense layer: current[n] = sum_m in[m] * W[m, n].
std::vector<double> dense_current(std::span<const double> spikes_in, const LayerParams& p);

// f(I, W) for a dilated causal conv layer, reading the present input and
// K-1 dilated taps from the history. The present input must have been pushed
// onto the history before calling. For K = 1 this equals dense_current with
// W[0] for any dilation.
std::vector<double> causal_conv_current(const RingHistory& history, const LayerParams& p);

// One LIF step with soft reset:
//   u' = alpha .* u + (1 - alpha) .* current - u_th * s_prev
//   s' = 1 where u' >= u_th else 0
// The reset uses the spike of the previous step, so the update is a pure
// function of (previous state, current input). Overwrites state.u/state.s.
void lif_step(LayerState& state, std::span<const double> current, const LayerParams& p,
              const SimGrid& grid);

// Non-spiking leaky integrator: u' = alpha_out * u + (1 - alpha_out) * current.
void leaky_output_step(std::span<double> u, std::span<const double> current, double tau_out,
                       const SimGrid& grid);

// Spike nonlinearity used by the forward pass. `binary` is the production
// Heaviside step. `relaxed` substitutes the hard step with the piecewise
// linear ramp whose derivative is exactly the box surrogate, making the whole
// network differentiable; gradient checking runs in this mode.
enum class SpikeMode { binary, relaxed };

// Pre-drawn dropout masks, one per hidden layer, shaped T x N and already
// scaled (entries are 0 or 1/(1-p)). Masks are applied to the spikes leaving
// each hidden layer. Keeping the plan explicit makes replay and finite
// differences reproducible.
struct DropoutPlan {
  std::vector<std::vector<double>> masks;
};

DropoutPlan make_dropout_plan(const NetworkSpec& spec, double p, Rng& rng);

struct ForwardOptions {
  bool record = false;
  SpikeMode mode = SpikeMode::binary;
  double surrogate_beta = 0.5;           // relaxed mode ramp half-width
  const DropoutPlan* dropout = nullptr;  // nullptr = no dropout
};

// Everything the backward pass needs, recorded layer by layer.
struct LayerTrace {
  std::vector<double> current;  // T x N, f(I, W) per step
  std::vector<double> voltage;  // T x N, membrane voltage after the update
  std::vector<double> spikes;   // T x N, empty for the output layer
  std::vector<double> mask;     // T x N scaled dropout mask, empty if none
};

struct Tape {
  NetworkSpec spec;
  SpikeMode mode = SpikeMode::binary;
  double beta = 0.5;
  std::vector<double> input;       // T x input_size copy
  std::vector<LayerTrace> layers;  // hidden layers then output layer
};

// Runs the full network for grid.steps steps from zero state. Returns the
// output-neuron membrane voltages, row-major T x output_size. When
// options.record is set and tape != nullptr, fills the tape for BPTT.
std::vector<double> forward_pass(const NetworkSpec& spec, const std::vector<LayerParams>& params,
                                 std::span<const double> input, const ForwardOptions& options = {},
                                 Tape* tape = nullptr);

// Single-precision inference path (no tape). Same dynamics evaluated in
// float32; satisfies the simulator invariants at looser tolerance.
std::vector<float> forward_pass_f32(const NetworkSpec& spec,
                                    const std::vector<LayerParams>& params,
                                    std::span<const double> input,
                                    const ForwardOptions& options = {});

// Reconstructs the dropout plan a tape was recorded with (identity when the
// tape carries no masks).
DropoutPlan plan_from_tape(const Tape& tape);

// Re-runs the forward pass from the tape's stored input, mode and masks, and
// checks that every recorded current, voltage and spike is reproduced
// bit-exactly.
bool replay_matches(const Tape& tape, const std::vector<LayerParams>& params);

// Shape/count consistency between a spec and a parameter list; throws on
// mismatch. Used by the forward and backward passes.
void check_params_match(const NetworkSpec& spec, const std::vector<LayerParams>& params);

}  // namespace tsnn
