#include "tsnn/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tsnn {

double OptimSpec::learning_rate(int epoch) const {
  if (epoch < decay_start_epoch) return lr0;
  if (decay_mode == DecayMode::step) return lr0 * decay_factor;
  const int last = epochs - 1;
  if (last <= decay_start_epoch) return lr0 * decay_factor;
  const double frac = static_cast<double>(epoch - decay_start_epoch) /
                      static_cast<double>(last - decay_start_epoch);
  return lr0 * (1.0 + (decay_factor - 1.0) * std::min(frac, 1.0));
}

void OptimSpec::validate() const {
  if (!(lr0 > 0.0)) throw std::invalid_argument("optim: lr0 must be positive");
  if (epochs < 0) throw std::invalid_argument("optim: epochs must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("optim: batch_size must be >= 1");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0))
    throw std::invalid_argument("optim: dropout_p must be in [0, 1)");
  if (l2_coeff < 0.0 || tau_reg_coeff < 0.0)
    throw std::invalid_argument("optim: regularizer coefficients must be >= 0");
  if (surrogate_beta < 0.0) throw std::invalid_argument("optim: surrogate_beta must be >= 0");
}

void AdamState::resize_like(const std::vector<LayerParams>& params) {
  step = 0;
  m_w.resize(params.size());
  v_w.resize(params.size());
  m_tau.resize(params.size());
  v_tau.resize(params.size());
  for (size_t l = 0; l < params.size(); ++l) {
    m_w[l].assign(params[l].weight_count(), 0.0);
    v_w[l].assign(params[l].weight_count(), 0.0);
    m_tau[l].assign(params[l].out_size, 0.0);
    v_tau[l].assign(params[l].out_size, 0.0);
  }
}

namespace {

void adam_update(std::vector<double>& param, const std::vector<double>& grad,
                 std::vector<double>& m, std::vector<double>& v, double lr, double bc1,
                 double bc2, const OptimSpec& spec, double extra_l2, size_t layer,
                 const char* group) {
  for (size_t i = 0; i < param.size(); ++i) {
    double g = grad[i];
    if (!std::isfinite(g))
      throw std::runtime_error("optimizer_step: non-finite gradient in layer " +
                               std::to_string(layer) + " (" + group + "), index " +
                               std::to_string(i));
    g += extra_l2 * param[i];
    m[i] = spec.beta1 * m[i] + (1.0 - spec.beta1) * g;
    v[i] = spec.beta2 * v[i] + (1.0 - spec.beta2) * g * g;
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    param[i] -= lr * m_hat / (std::sqrt(v_hat) + spec.adam_eps);
  }
}

}  // namespace

void optimizer_step(std::vector<LayerParams>& params, const Gradients& grads, AdamState& state,
                    int epoch, const OptimSpec& spec, double tau_floor) {
  if (grads.weights.size() != params.size() || state.m_w.size() != params.size())
    throw std::invalid_argument("optimizer_step: shape mismatch");
  const double lr = spec.learning_rate(epoch);
  state.step += 1;
  const double bc1 = 1.0 - std::pow(spec.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(spec.beta2, static_cast<double>(state.step));
  for (size_t l = 0; l < params.size(); ++l) {
    adam_update(params[l].weights, grads.weights[l], state.m_w[l], state.v_w[l],
                lr * params[l].lr_scale, bc1, bc2, spec, spec.l2_coeff, l, "weights");
    if (spec.train_tau && params[l].spiking) {
      adam_update(params[l].tau, grads.tau[l], state.m_tau[l], state.v_tau[l], lr, bc1, bc2,
                  spec, 0.0, l, "tau");
      for (auto& t : params[l].tau) t = std::clamp(t, tau_floor, kTauCeiling);
    }
  }
}

}  // namespace tsnn
