#include "tsnn/grad.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace tsnn {

double surrogate_box(double u, double u_th, double beta) {
  if (!(beta > 0.0)) throw std::domain_error("surrogate_box: beta must be positive");
  return std::abs(u - u_th) < beta ? 1.0 / (2.0 * beta) : 0.0;
}

void Gradients::resize_like(const std::vector<LayerParams>& params) {
  weights.resize(params.size());
  tau.resize(params.size());
  for (size_t l = 0; l < params.size(); ++l) {
    weights[l].assign(params[l].weight_count(), 0.0);
    tau[l].assign(params[l].out_size, 0.0);
  }
}

void Gradients::zero() {
  for (auto& w : weights) std::fill(w.begin(), w.end(), 0.0);
  for (auto& t : tau) std::fill(t.begin(), t.end(), 0.0);
}

void Gradients::add_scaled(double a, const Gradients& other) {
  for (size_t l = 0; l < weights.size(); ++l) {
    for (size_t i = 0; i < weights[l].size(); ++i) weights[l][i] += a * other.weights[l][i];
    for (size_t i = 0; i < tau[l].size(); ++i) tau[l][i] += a * other.tau[l][i];
  }
}

void Gradients::scale(double a) {
  for (auto& w : weights)
    for (auto& x : w) x *= a;
  for (auto& t : tau)
    for (auto& x : t) x *= a;
}

namespace {

inline double box_value(double u, double u_th, double beta) {
  if (beta <= 0.0) return 0.0;  // degenerate width disables the surrogate
  return std::abs(u - u_th) < beta ? 1.0 / (2.0 * beta) : 0.0;
}

void check_finite(std::span<const double> v, size_t layer, int step) {
  for (double x : v) {
    if (!std::isfinite(x))
      throw std::runtime_error("backward_pass: non-finite gradient at layer " +
                               std::to_string(layer) + ", step " + std::to_string(step));
  }
}

}  // namespace

void backward_pass(const Tape& tape, const std::vector<LayerParams>& params,
                   std::span<const double> dL_dout, const BackwardOptions& options,
                   Gradients& grads, bool accumulate) {
  check_params_match(tape.spec, params);
  const int T = tape.spec.grid.steps;
  const double dt = tape.spec.grid.dt;
  const size_t n_layers = params.size();
  if (tape.layers.size() != n_layers)
    throw std::invalid_argument("backward_pass: tape/params layer count mismatch");
  if (dL_dout.size() != static_cast<size_t>(T) * tape.spec.output_size)
    throw std::invalid_argument("backward_pass: dL_dout must be T x output_size");
  for (double x : dL_dout)
    if (!std::isfinite(x)) throw std::invalid_argument("backward_pass: non-finite dL_dout");

  if (!accumulate) grads.resize_like(params);

  // Gradient w.r.t. the signal each layer passed upward (its masked spikes),
  // rebuilt as we walk back through the stack.
  std::vector<double> d_sig_above;
  std::vector<double> d_sig_below;

  // Input each layer saw at step t: the raw network input for layer 0,
  // masked spikes of the previous layer otherwise.
  const auto layer_input = [&](size_t l, int t, int m) -> double {
    if (l == 0) return tape.input[static_cast<size_t>(t) * tape.spec.input_size + m];
    const LayerTrace& below = tape.layers[l - 1];
    const size_t idx = static_cast<size_t>(t) * params[l - 1].out_size + m;
    const double s = below.spikes[idx];
    return below.mask.empty() ? s : s * below.mask[idx];
  };

  std::vector<double> d_mem;  // dL/du for the layer being processed
  std::vector<double> dc;     // dL/dcurrent at the current step
  std::vector<double> d_alpha;

  for (size_t li = n_layers; li-- > 0;) {
    const LayerParams& p = params[li];
    const LayerTrace& tr = tape.layers[li];
    const int N = p.out_size;
    const int M = p.in_size;
    const bool last = li + 1 == n_layers;

    std::vector<double> alpha(N);
    for (int n = 0; n < N; ++n) alpha[n] = decay_factor(p.tau[n], dt);

    d_mem.assign(N, 0.0);
    dc.assign(N, 0.0);
    d_alpha.assign(N, 0.0);
    d_sig_below.assign(static_cast<size_t>(T) * M, 0.0);
    auto& dW = grads.weights[li];

    for (int t = T - 1; t >= 0; --t) {
      const size_t off = static_cast<size_t>(t) * N;
      if (last) {
        // Leaky-integrator readout: loss feeds the voltage directly.
        for (int n = 0; n < N; ++n) d_mem[n] = dL_dout[off + n] + alpha[n] * d_mem[n];
      } else {
        for (int n = 0; n < N; ++n) {
          // d_sig_above is dL/d(masked spike); undo the mask scaling.
          double ds = d_sig_above[off + n];
          if (!tr.mask.empty()) ds *= tr.mask[off + n];
          if (options.reset_grad) ds -= p.u_th * d_mem[n];
          const double surr = box_value(tr.voltage[off + n], p.u_th, tape.beta);
          d_mem[n] = surr * ds + alpha[n] * d_mem[n];
        }
      }
      check_finite(d_mem, li, t);

      for (int n = 0; n < N; ++n) {
        const size_t idx = off + n;
        const double u_prev = t > 0 ? tr.voltage[idx - N] : 0.0;
        d_alpha[n] += d_mem[n] * (u_prev - tr.current[idx]);
        dc[n] = (1.0 - alpha[n]) * d_mem[n];
      }

      if (p.kind == LayerKind::dense) {
        for (int m = 0; m < M; ++m) {
          const double x = layer_input(li, t, m);
          const double* w_row = p.weights.data() + static_cast<size_t>(m) * N;
          double* dw_row = dW.data() + static_cast<size_t>(m) * N;
          double acc = 0.0;
          if (x != 0.0) {
            for (int n = 0; n < N; ++n) {
              dw_row[n] += x * dc[n];
              acc += dc[n] * w_row[n];
            }
          } else {
            for (int n = 0; n < N; ++n) acc += dc[n] * w_row[n];
          }
          d_sig_below[static_cast<size_t>(t) * M + m] += acc;
        }
      } else {
        for (int k = 0; k < p.kernel_size; ++k) {
          const int ts = t - k * p.dilation;
          if (ts < 0) break;  // zero padding carries no gradient
          const size_t w_off = static_cast<size_t>(k) * M * N;
          for (int m = 0; m < M; ++m) {
            const double x = layer_input(li, ts, m);
            const double* w_row = p.weights.data() + w_off + static_cast<size_t>(m) * N;
            double* dw_row = dW.data() + w_off + static_cast<size_t>(m) * N;
            double acc = 0.0;
            if (x != 0.0) {
              for (int n = 0; n < N; ++n) {
                dw_row[n] += x * dc[n];
                acc += dc[n] * w_row[n];
              }
            } else {
              for (int n = 0; n < N; ++n) acc += dc[n] * w_row[n];
            }
            d_sig_below[static_cast<size_t>(ts) * M + m] += acc;
          }
        }
      }
    }

    if (options.train_tau && p.spiking) {
      auto& dtau = grads.tau[li];
      for (int n = 0; n < N; ++n) {
        const double tau = p.tau[n];
        dtau[n] += d_alpha[n] * (dt / (tau * tau)) * std::exp(-dt / tau);
      }
    }

    d_sig_above.swap(d_sig_below);
  }
}

Gradients backward_pass(const Tape& tape, const std::vector<LayerParams>& params,
                        std::span<const double> dL_dout, const BackwardOptions& options) {
  Gradients grads;
  backward_pass(tape, params, dL_dout, options, grads, false);
  return grads;
}

Gradients finite_difference_gradient(const NetworkSpec& spec, std::vector<LayerParams> params,
                                     const LossOfParams& loss_fn, double epsilon,
                                     bool include_tau) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("finite_difference_gradient: epsilon > 0");
  check_params_match(spec, params);
  Gradients grads;
  grads.resize_like(params);
  const auto central = [&](double& slot) {
    const double saved = slot;
    slot = saved + epsilon;
    const double up = loss_fn(params);
    slot = saved - epsilon;
    const double down = loss_fn(params);
    slot = saved;
    return (up - down) / (2.0 * epsilon);
  };
  for (size_t l = 0; l < params.size(); ++l) {
    for (size_t i = 0; i < params[l].weights.size(); ++i)
      grads.weights[l][i] = central(params[l].weights[i]);
    if (include_tau && params[l].spiking) {
      for (size_t i = 0; i < params[l].tau.size(); ++i)
        grads.tau[l][i] = central(params[l].tau[i]);
    }
  }
  return grads;
}

GradCompare compare_gradients(const Gradients& a, const Gradients& b, double tiny_floor,
                              double tiny_abs) {
  GradCompare res;
  const auto fold = [&](const std::vector<double>& x, const std::vector<double>& y,
                        double& max_rel, double worst[2]) {
    for (size_t i = 0; i < x.size(); ++i) {
      const double mag = std::max(std::abs(x[i]), std::abs(y[i]));
      const double diff = std::abs(x[i] - y[i]);
      if (mag < tiny_floor) {
        // below the finite-difference noise floor; require absolute agreement
        if (diff > tiny_abs) res.tiny_ok = false;
      } else if (diff / mag > max_rel) {
        max_rel = diff / mag;
        worst[0] = x[i];
        worst[1] = y[i];
      }
    }
  };
  for (size_t l = 0; l < a.weights.size(); ++l) {
    fold(a.weights[l], b.weights[l], res.max_rel_weights, res.worst_weights);
    fold(a.tau[l], b.tau[l], res.max_rel_tau, res.worst_tau);
  }
  return res;
}

}  // namespace tsnn
