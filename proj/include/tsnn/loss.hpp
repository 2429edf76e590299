#pragma once

#include <span>
#include <vector>

#include "tsnn/network.hpp"

namespace tsnn {

enum class LossKind { sum_softmax, max_over_windows, double_softmax };

// Half-open step range [start, end) with its target class.
struct Window {
  int start = 0;
  int end = 0;
  int label = 0;
};

// Throws unless windows are non-empty, in-range and pairwise disjoint.
void validate_windows(std::span<const Window> windows, int steps, int n_classes);

// Cross-entropy averaged over the task duration:
//   L = -(1/T) sum_t log softmax(out[t])[label]
// with the usual max-subtraction stabilization.
double loss_sum(std::span<const double> out, int steps, int n_out, int label);
void loss_sum_grad(std::span<const double> out, int steps, int n_out, int label,
                   std::span<double> dL_dout);

// Max-over-time readout: per window take the per-neuron maximum voltage over
// the window's steps, apply cross-entropy against the window label, average
// over windows. The gradient routes to the (first) maximizing step.
double loss_max_windows(std::span<const double> out, int steps, int n_out,
                        std::span<const Window> windows);
void loss_max_windows_grad(std::span<const double> out, int steps, int n_out,
                           std::span<const Window> windows, std::span<double> dL_dout);

// Double-softmax readout: per-step softmax integrated over the task duration,
// then softmaxed once more. Kept as an alternative readout behind a config
// switch.
double loss_double_softmax(std::span<const double> out, int steps, int n_out, int label);
void loss_double_softmax_grad(std::span<const double> out, int steps, int n_out, int label,
                              std::span<double> dL_dout);

// Sum over layers of the squared L2 norm of the mean-centered tau vector.
// Invariant to adding a constant to all taus of a layer.
double tau_regularizer(std::span<const std::vector<double>> taus_per_layer);

// d(tau_regularizer)/d(tau_j) = 2 (tau_j - mean) for the layer holding j.
void tau_regularizer_grad(std::span<const double> taus, double coeff, std::span<double> grad_out);

// Predicted class = argmax over neurons of the time-summed log-softmax.
int predict_sum(std::span<const double> out, int steps, int n_out);

// Predicted class for one window = argmax of the windowed max voltage.
int predict_window(std::span<const double> out, int steps, int n_out, const Window& window);

}  // namespace tsnn
