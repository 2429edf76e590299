#pragma once

#include <functional>
#include <span>
#include <vector>

#include "tsnn/sim.hpp"

namespace tsnn {

// Box surrogate for the Heaviside derivative: 1/(2*beta) on |u - u_th| < beta,
// zero outside; integrates to 1 over u. Throws std::domain_error for beta <= 0.
double surrogate_box(double u, double u_th, double beta);

// Per-layer gradient arrays, shapes mirroring LayerParams. tau gradients are
// filled only for spiking layers and only when train_tau is set; they are
// exactly zero otherwise (the output layer's tau is never trained).
struct Gradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> tau;

  void resize_like(const std::vector<LayerParams>& params);
  void zero();
  void add_scaled(double a, const Gradients& other);  // this += a * other
  void scale(double a);
};

struct BackwardOptions {
  bool train_tau = false;
  // When false the reset term -u_th*s(t) is treated as a constant
  // ("no-reset-grad"); by default it is differentiated through the same
  // surrogate as the threshold crossing.
  bool reset_grad = true;
};

// Reverse-mode sweep over a recorded trajectory. dL_dout is the loss gradient
// w.r.t. the output voltages, row-major T x output_size. The spike
// nonlinearity is differentiated with the box surrogate of half-width
// tape.beta; d(alpha)/d(tau) = (dt/tau^2) exp(-dt/tau) feeds both the decay
// and the (1-alpha) input-gain terms. When accumulate is set, gradients are
// added into `grads` (which must already have matching shapes); otherwise
// `grads` is resized and zeroed first.
void backward_pass(const Tape& tape, const std::vector<LayerParams>& params,
                   std::span<const double> dL_dout, const BackwardOptions& options,
                   Gradients& grads, bool accumulate = false);

Gradients backward_pass(const Tape& tape, const std::vector<LayerParams>& params,
                        std::span<const double> dL_dout, const BackwardOptions& options = {});

// Central-difference oracle: (L(p+eps) - L(p-eps)) / (2 eps) for every weight
// (and tau entry when include_tau). Intended for small nets; the loss callback
// must be a deterministic function of the parameters.
using LossOfParams = std::function<double(const std::vector<LayerParams>&)>;

Gradients finite_difference_gradient(const NetworkSpec& spec, std::vector<LayerParams> params,
                                     const LossOfParams& loss_fn, double epsilon,
                                     bool include_tau);

// Comparison summary between an analytic and a finite-difference gradient.
// Relative error per entry is |a-b| / max(|a|, |b|). Entries below tiny_floor
// are checked absolutely against tiny_abs instead: the central-difference
// oracle has a rounding floor of roughly |L|*eps_machine/eps ~ 1e-11, so a
// relative comparison carries no information there.
struct GradCompare {
  double max_rel_weights = 0.0;
  double max_rel_tau = 0.0;
  double worst_weights[2] = {0.0, 0.0};  // (a, b) behind max_rel_weights
  double worst_tau[2] = {0.0, 0.0};
  bool tiny_ok = true;
};

GradCompare compare_gradients(const Gradients& a, const Gradients& b, double tiny_floor = 3e-6,
                              double tiny_abs = 1e-9);

}  // namespace tsnn
