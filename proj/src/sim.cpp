#include "tsnn/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

namespace tsnn {

void LayerState::reset(const LayerParams& p) {
  u.assign(p.out_size, 0.0);
  s.assign(p.out_size, 0.0);
  if (p.kind == LayerKind::conv) {
    history.reset(p.in_size, (p.kernel_size - 1) * p.dilation + 1);
  }
}

namespace {

template <typename Real>
void map_dense(std::span<const Real> in, std::span<const Real> w, int in_size, int out_size,
               std::span<Real> current) {
  std::fill(current.begin(), current.end(), Real(0));
  for (int m = 0; m < in_size; ++m) {
    const Real x = in[m];
    if (x == Real(0)) continue;  // spike trains are mostly zero
    const Real* row = w.data() + static_cast<size_t>(m) * out_size;
    for (int n = 0; n < out_size; ++n) current[n] += x * row[n];
  }
}

template <typename Real>
void map_conv(const RingHistoryT<Real>& hist, std::span<const Real> w, int kernel_size,
              int dilation, int in_size, int out_size, std::span<Real> current) {
  std::fill(current.begin(), current.end(), Real(0));
  for (int k = 0; k < kernel_size; ++k) {
    std::span<const Real> in = hist.lag(k * dilation);
    const Real* w_k = w.data() + static_cast<size_t>(k) * in_size * out_size;
    for (int m = 0; m < in_size; ++m) {
      const Real x = in[m];
      if (x == Real(0)) continue;
      const Real* row = w_k + static_cast<size_t>(m) * out_size;
      for (int n = 0; n < out_size; ++n) current[n] += x * row[n];
    }
  }
}

template <typename Real>
inline Real spike_value(Real u, Real u_th, SpikeMode mode, Real beta) {
  if (mode == SpikeMode::binary || beta <= Real(0)) return u >= u_th ? Real(1) : Real(0);
  const Real x = (u - u_th + beta) / (Real(2) * beta);
  return std::clamp(x, Real(0), Real(1));
}

}  // namespace

std::vector<double> dense_current(std::span<const double> spikes_in, const LayerParams& p) {
  if (spikes_in.size() != static_cast<size_t>(p.in_size))
    throw std::invalid_argument("dense_current: input length mismatch");
  if (p.weights.size() != p.weight_count())
    throw std::invalid_argument("dense_current: weight shape mismatch");
  std::vector<double> current(p.out_size);
  map_dense<double>(spikes_in, p.weights, p.in_size, p.out_size, current);
  return current;
}

std::vector<double> causal_conv_current(const RingHistory& history, const LayerParams& p) {
  if (p.dilation < 1) throw std::invalid_argument("causal_conv_current: dilation must be >= 1");
  if (p.weights.size() != p.weight_count())
    throw std::invalid_argument("causal_conv_current: weight shape mismatch");
  if (history.capacity() < (p.kernel_size - 1) * p.dilation + 1)
    throw std::invalid_argument("causal_conv_current: history shorter than (K-1)*d");
  std::vector<double> current(p.out_size);
  map_conv<double>(history, p.weights, p.kernel_size, p.dilation, p.in_size, p.out_size, current);
  return current;
}

void lif_step(LayerState& state, std::span<const double> current, const LayerParams& p,
              const SimGrid& grid) {
  if (current.size() != static_cast<size_t>(p.out_size) ||
      state.u.size() != static_cast<size_t>(p.out_size))
    throw std::invalid_argument("lif_step: shape mismatch");
  for (int n = 0; n < p.out_size; ++n) {
    const double alpha = decay_factor(p.tau[n], grid.dt);
    const double u_next =
        alpha * state.u[n] + (1.0 - alpha) * current[n] - p.u_th * state.s[n];
    state.u[n] = u_next;
    state.s[n] = u_next >= p.u_th ? 1.0 : 0.0;
  }
}

void leaky_output_step(std::span<double> u, std::span<const double> current, double tau_out,
                       const SimGrid& grid) {
  if (u.size() != current.size()) throw std::invalid_argument("leaky_output_step: shape mismatch");
  const double alpha = decay_factor(tau_out, grid.dt);
  for (size_t n = 0; n < u.size(); ++n) u[n] = alpha * u[n] + (1.0 - alpha) * current[n];
}

void check_params_match(const NetworkSpec& spec, const std::vector<LayerParams>& params) {
  spec.validate();
  if (params.size() != spec.hidden.size() + 1)
    throw std::invalid_argument("params/spec mismatch: expected one parameter set per layer");
  int in_size = spec.input_size;
  for (size_t l = 0; l < spec.hidden.size(); ++l) {
    const auto& p = params[l];
    const auto& ls = spec.hidden[l];
    if (p.in_size != in_size || p.out_size != ls.size || p.kind != ls.kind || !p.spiking)
      throw std::invalid_argument("params/spec mismatch at hidden layer " + std::to_string(l));
    if (ls.kind == LayerKind::conv &&
        (p.kernel_size != ls.kernel_size || p.dilation != ls.dilation))
      throw std::invalid_argument("params/spec conv mismatch at hidden layer " + std::to_string(l));
    p.validate(spec.grid);
    in_size = ls.size;
  }
  const auto& out = params.back();
  if (out.in_size != in_size || out.out_size != spec.output_size ||
      out.kind != LayerKind::dense || out.spiking)
    throw std::invalid_argument("params/spec mismatch at output layer");
  out.validate(spec.grid);
}

DropoutPlan make_dropout_plan(const NetworkSpec& spec, double p, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("dropout probability must be in [0, 1)");
  DropoutPlan plan;
  plan.masks.resize(spec.hidden.size());
  const double keep_scale = 1.0 / (1.0 - p);
  for (size_t l = 0; l < spec.hidden.size(); ++l) {
    auto& mask = plan.masks[l];
    mask.resize(static_cast<size_t>(spec.grid.steps) * spec.hidden[l].size);
    for (auto& m : mask) m = (p > 0.0 && rng.bernoulli(p)) ? 0.0 : keep_scale;
  }
  return plan;
}

namespace {

template <typename Real>
struct EngineLayer {
  const LayerParams* p = nullptr;
  std::vector<Real> w_store;     // converted copy when Real != double
  std::span<const Real> w;
  std::vector<Real> alpha;       // per neuron exp(-dt/tau)
  std::vector<Real> u, s, s_out, cur;
  RingHistoryT<Real> history;
};

template <typename Real>
std::vector<Real> run_network(const NetworkSpec& spec, const std::vector<LayerParams>& params,
                              std::span<const double> input, const ForwardOptions& opt,
                              Tape* tape) {
  check_params_match(spec, params);
  const int T = spec.grid.steps;
  if (input.size() != static_cast<size_t>(T) * spec.input_size)
    throw std::invalid_argument("forward_pass: input must be T x input_size");
  if (opt.dropout) {
    if (opt.dropout->masks.size() != spec.hidden.size())
      throw std::invalid_argument("forward_pass: dropout plan layer count mismatch");
    for (size_t l = 0; l < spec.hidden.size(); ++l)
      if (opt.dropout->masks[l].size() != static_cast<size_t>(T) * spec.hidden[l].size)
        throw std::invalid_argument("forward_pass: dropout mask shape mismatch");
  }

  const size_t n_layers = params.size();
  std::vector<EngineLayer<Real>> layers(n_layers);
  for (size_t l = 0; l < n_layers; ++l) {
    auto& e = layers[l];
    e.p = &params[l];
    if constexpr (std::is_same_v<Real, double>) {
      e.w = params[l].weights;
    } else {
      e.w_store.assign(params[l].weights.begin(), params[l].weights.end());
      e.w = e.w_store;
    }
    e.alpha.resize(params[l].out_size);
    for (int n = 0; n < params[l].out_size; ++n)
      e.alpha[n] = static_cast<Real>(decay_factor(params[l].tau[n], spec.grid.dt));
    e.u.assign(params[l].out_size, Real(0));
    e.s.assign(params[l].out_size, Real(0));
    e.s_out.assign(params[l].out_size, Real(0));
    e.cur.assign(params[l].out_size, Real(0));
    if (params[l].kind == LayerKind::conv)
      e.history.reset(params[l].in_size, (params[l].kernel_size - 1) * params[l].dilation + 1);
  }

  const bool record = opt.record && tape != nullptr;
  if (record) {
    tape->spec = spec;
    tape->mode = opt.mode;
    tape->beta = opt.surrogate_beta;
    tape->input.assign(input.begin(), input.end());
    tape->layers.assign(n_layers, LayerTrace{});
    for (size_t l = 0; l < n_layers; ++l) {
      auto& tr = tape->layers[l];
      const size_t tn = static_cast<size_t>(T) * params[l].out_size;
      tr.current.assign(tn, 0.0);
      tr.voltage.assign(tn, 0.0);
      if (params[l].spiking) tr.spikes.assign(tn, 0.0);
      if (opt.dropout && l < spec.hidden.size()) tr.mask = opt.dropout->masks[l];
    }
  }

  std::vector<Real> x(spec.input_size);
  std::vector<Real> out(static_cast<size_t>(T) * spec.output_size);
  const Real beta = static_cast<Real>(opt.surrogate_beta);

  for (int t = 0; t < T; ++t) {
    const double* in_row = input.data() + static_cast<size_t>(t) * spec.input_size;
    x.assign(in_row, in_row + spec.input_size);
    std::span<const Real> layer_in(x);

    for (size_t l = 0; l < n_layers; ++l) {
      auto& e = layers[l];
      const LayerParams& p = *e.p;
      if (p.kind == LayerKind::conv) {
        e.history.push(layer_in);
        map_conv<Real>(e.history, e.w, p.kernel_size, p.dilation, p.in_size, p.out_size, e.cur);
      } else {
        map_dense<Real>(layer_in, e.w, p.in_size, p.out_size, e.cur);
      }

      if (p.spiking) {
        const Real u_th = static_cast<Real>(p.u_th);
        for (int n = 0; n < p.out_size; ++n) {
          const Real u_next =
              e.alpha[n] * e.u[n] + (Real(1) - e.alpha[n]) * e.cur[n] - u_th * e.s[n];
          e.u[n] = u_next;
          e.s[n] = spike_value<Real>(u_next, u_th, opt.mode, beta);
        }
        if (record) {
          auto& tr = tape->layers[l];
          const size_t off = static_cast<size_t>(t) * p.out_size;
          for (int n = 0; n < p.out_size; ++n) {
            tr.current[off + n] = static_cast<double>(e.cur[n]);
            tr.voltage[off + n] = static_cast<double>(e.u[n]);
            tr.spikes[off + n] = static_cast<double>(e.s[n]);
          }
        }
        // the reset at t+1 uses the raw spike; dropout gates only the
        // signal leaving the layer
        if (opt.dropout) {
          const double* mask = opt.dropout->masks[l].data() + static_cast<size_t>(t) * p.out_size;
          for (int n = 0; n < p.out_size; ++n) e.s_out[n] = e.s[n] * static_cast<Real>(mask[n]);
          layer_in = e.s_out;
        } else {
          layer_in = e.s;
        }
      } else {
        for (int n = 0; n < p.out_size; ++n)
          e.u[n] = e.alpha[n] * e.u[n] + (Real(1) - e.alpha[n]) * e.cur[n];
        const size_t off = static_cast<size_t>(t) * p.out_size;
        for (int n = 0; n < p.out_size; ++n) out[off + n] = e.u[n];
        if (record) {
          auto& tr = tape->layers[l];
          for (int n = 0; n < p.out_size; ++n) {
            tr.current[off + n] = static_cast<double>(e.cur[n]);
            tr.voltage[off + n] = static_cast<double>(e.u[n]);
          }
        }
      }
    }
  }
  return out;
}

}  // namespace

std::vector<double> forward_pass(const NetworkSpec& spec, const std::vector<LayerParams>& params,
                                 std::span<const double> input, const ForwardOptions& options,
                                 Tape* tape) {
  return run_network<double>(spec, params, input, options, tape);
}

std::vector<float> forward_pass_f32(const NetworkSpec& spec,
                                    const std::vector<LayerParams>& params,
                                    std::span<const double> input,
                                    const ForwardOptions& options) {
  ForwardOptions opt = options;
  opt.record = false;
  return run_network<float>(spec, params, input, opt, nullptr);
}

DropoutPlan plan_from_tape(const Tape& tape) {
  DropoutPlan plan;
  plan.masks.resize(tape.spec.hidden.size());
  for (size_t l = 0; l < tape.spec.hidden.size(); ++l) {
    const auto& mask = tape.layers[l].mask;
    if (mask.empty()) {
      plan.masks[l].assign(static_cast<size_t>(tape.spec.grid.steps) * tape.spec.hidden[l].size,
                           1.0);
    } else {
      plan.masks[l] = mask;
    }
  }
  return plan;
}

bool replay_matches(const Tape& tape, const std::vector<LayerParams>& params) {
  const DropoutPlan plan = plan_from_tape(tape);
  ForwardOptions opt;
  opt.record = true;
  opt.mode = tape.mode;
  opt.surrogate_beta = tape.beta;
  opt.dropout = &plan;
  Tape fresh;
  forward_pass(tape.spec, params, tape.input, opt, &fresh);
  if (fresh.layers.size() != tape.layers.size()) return false;
  for (size_t l = 0; l < tape.layers.size(); ++l) {
    if (fresh.layers[l].current != tape.layers[l].current) return false;
    if (fresh.layers[l].voltage != tape.layers[l].voltage) return false;
    if (fresh.layers[l].spikes != tape.layers[l].spikes) return false;
  }
  return true;
}

}  // namespace tsnn
