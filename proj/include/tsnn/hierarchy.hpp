#pragma once

#include <utility>
#include <vector>

#include "tsnn/rng.hpp"

namespace tsnn {

enum class TauShape { homogeneous, linear, tanh_shape, paper_literal_linear };

// Per-layer time-constant schedule. Layer index is 1-based in the formulas.
//
// linear (normalized, the default): tau(l) = tau_mu + ((l-1)/(H-1) - 1/2) * delta_tau,
//   so the mean over layers is exactly tau_mu and last-first is exactly delta_tau.
// paper_literal_linear: tau(l) = tau_mu + (l - H/2) * delta_tau / 2, kept as a
//   comparison mode (its mean is offset and its span is (H-1)*delta_tau/2).
// tanh: g(l) = tanh(steepness*(l/H - centering)), affinely mapped so that
//   min->-1 and max->+1, then tau(l) = tau_mu + mapped(l) * delta_tau / 2.
struct TauSchedule {
  TauShape shape = TauShape::homogeneous;
  double tau_mu = 0.3;     // seconds
  double delta_tau = 0.0;  // seconds, may be negative
  double steepness = 0.5;  // tanh only
  double centering = 0.5;  // tanh only
  int layers = 1;
};

// tau_floor > 0 turns on the stability-floor check (throws when violated).
std::vector<double> linear_tau_means(const TauSchedule& sched, double tau_floor = 0.0);
std::vector<double> tanh_tau_means(const TauSchedule& sched, double tau_floor = 0.0);

// Dispatch on sched.shape (homogeneous returns layers copies of tau_mu).
std::vector<double> tau_layer_means(const TauSchedule& sched, double tau_floor = 0.0);

// Draws n per-neuron time constants from Normal(mean, std_frac*mean),
// clamped to tau_floor.
std::vector<double> sample_layer_taus(double mean, int n, double std_frac, double tau_floor,
                                      Rng& rng);

// Integer linear ramps for kernel sizes and dilations, mean +/- delta/2
// across layers, snapped with round-half-away-from-zero.
struct ConvSchedule {
  int mean_kernel = 5;
  int delta_kernel = 0;
  int mean_dilation = 1;
  int delta_dilation = 0;
  int layers = 1;
};

std::pair<std::vector<int>, std::vector<int>> conv_schedules(const ConvSchedule& sched);

}  // namespace tsnn
