#pragma once

#include <cstdint>
#include <vector>

#include "tsnn/grad.hpp"
#include "tsnn/loss.hpp"
#include "tsnn/network.hpp"

namespace tsnn {

enum class DecayMode { linear, step };

struct OptimSpec {
  double lr0 = 0.01;
  int decay_start_epoch = 25;
  double decay_factor = 0.5;
  DecayMode decay_mode = DecayMode::linear;
  int epochs = 60;
  int batch_size = 512;
  double dropout_p = 0.1;
  double l2_coeff = 0.0;
  double tau_reg_coeff = 1e-5;
  bool train_tau = false;
  bool reset_grad = true;
  double surrogate_beta = 0.5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  uint64_t seed = 42;

  // lr0 until decay_start_epoch, then linear decay reaching
  // lr0*decay_factor at the final epoch (step mode drops immediately).
  double learning_rate(int epoch) const;
  void validate() const;
};

// Adam moments; persisted in checkpoints, so layout is stable.
struct AdamState {
  uint64_t step = 0;
  std::vector<std::vector<double>> m_w, v_w, m_tau, v_tau;

  void resize_like(const std::vector<LayerParams>& params);
};

// One adaptive-moment update. Adds l2_coeff * w to the weight gradients,
// applies bias-corrected Adam, then clamps every trained tau to
// [tau_floor, kTauCeiling]. Throws on non-finite gradients (with layer and
// parameter-group diagnostics). tau entries are updated only when
// spec.train_tau is set and the layer is spiking.
void optimizer_step(std::vector<LayerParams>& params, const Gradients& grads, AdamState& state,
                    int epoch, const OptimSpec& spec, double tau_floor);

}  // namespace tsnn
