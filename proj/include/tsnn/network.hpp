#pragma once

#include <cstddef>
#include <vector>

#include "tsnn/rng.hpp"

namespace tsnn {

// Discrete simulation grid. Every temporal quantity in the engine (time
// constants, dilation spans) lives on this grid.
struct SimGrid {
  double dt = 0.01;  // seconds per step
  int steps = 100;   // number of steps

  double tau_floor() const { return 1.5 * dt; }
  void validate() const;
};

// Upper clamp applied to time constants after every optimizer step.
inline constexpr double kTauCeiling = 10.0;

// Fixed firing threshold.
inline constexpr double kThreshold = 1.0;

enum class LayerKind { dense, conv };

struct LayerSpec {
  int size = 0;
  LayerKind kind = LayerKind::dense;
  int kernel_size = 1;  // conv only
  int dilation = 1;     // conv only
};

// Architecture description: hidden LIF layers (dense or dilated causal conv)
// followed by a non-spiking leaky-integrator readout.
struct NetworkSpec {
  SimGrid grid;
  int input_size = 0;
  std::vector<LayerSpec> hidden;
  int output_size = 0;
  double tau_out = 0.2;

  int n_hidden() const { return static_cast<int>(hidden.size()); }
  void validate() const;
};

// Per-layer parameters. Dense weights are stored input-major (w[m*N + n]),
// conv weights tap-major (w[(k*M + m)*N + n]) so that accumulating one input
// row is a contiguous axpy.
struct LayerParams {
  LayerKind kind = LayerKind::dense;
  int in_size = 0;
  int out_size = 0;
  int kernel_size = 1;
  int dilation = 1;
  bool spiking = true;  // false for the output layer
  std::vector<double> weights;
  std::vector<double> tau;  // seconds, per neuron
  double u_th = kThreshold;
  // Weight updates are scaled by this factor. Initialization compensates the
  // update's (1 - alpha) input gain by widening the weights 1/(1 - alpha);
  // scaling the learning rate identically makes the optimizer equivalent to
  // running on the unwidened parametrization.
  double lr_scale = 1.0;

  size_t weight_count() const {
    return static_cast<size_t>(kind == LayerKind::conv ? kernel_size : 1) * in_size * out_size;
  }
  void validate(const SimGrid& grid) const;
};

// alpha = exp(-dt/tau), the exponential-Euler decay per step.
// Throws std::domain_error below the stability floor tau >= 1.5*dt.
double decay_factor(double tau, double dt);

// Builds parameter arrays for a spec: Xavier-uniform weights, per-neuron time
// constants drawn from Normal(mean, tau_std_frac*mean) clamped to the floor.
// hidden_tau_means must have one entry per hidden layer. The output layer
// gets tau_out exactly (not sampled, not trained).
std::vector<LayerParams> init_params(const NetworkSpec& spec,
                                     const std::vector<double>& hidden_tau_means,
                                     double tau_std_frac, Rng& rng);

}  // namespace tsnn
