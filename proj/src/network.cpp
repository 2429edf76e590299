#include "tsnn/network.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "tsnn/hierarchy.hpp"

namespace tsnn {

void SimGrid::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("SimGrid: dt must be positive");
  if (steps < 1) throw std::invalid_argument("SimGrid: steps must be >= 1");
}

void NetworkSpec::validate() const {
  grid.validate();
  if (input_size < 1) throw std::invalid_argument("NetworkSpec: input_size must be >= 1");
  if (hidden.empty()) throw std::invalid_argument("NetworkSpec: at least one hidden layer required");
  if (output_size < 1) throw std::invalid_argument("NetworkSpec: output_size must be >= 1");
  if (!(tau_out >= grid.tau_floor()))
    throw std::invalid_argument("NetworkSpec: tau_out below stability floor");
  for (const auto& l : hidden) {
    if (l.size < 1) throw std::invalid_argument("NetworkSpec: hidden layer size must be >= 1");
    if (l.kind == LayerKind::conv) {
      if (l.kernel_size < 1 || l.dilation < 1)
        throw std::invalid_argument("NetworkSpec: conv layer needs kernel_size >= 1 and dilation >= 1");
    }
  }
}

void LayerParams::validate(const SimGrid& grid) const {
  if (in_size < 1 || out_size < 1) throw std::invalid_argument("LayerParams: bad shape");
  if (kind == LayerKind::conv && (kernel_size < 1 || dilation < 1))
    throw std::invalid_argument("LayerParams: conv needs kernel_size >= 1 and dilation >= 1");
  if (weights.size() != weight_count()) throw std::invalid_argument("LayerParams: weight array size mismatch");
  if (tau.size() != static_cast<size_t>(out_size))
    throw std::invalid_argument("LayerParams: tau array size mismatch");
  const double floor = grid.tau_floor();
  for (double t : tau) {
    if (!(t >= floor))
      throw std::invalid_argument("LayerParams: tau " + std::to_string(t) +
                                  " below stability floor " + std::to_string(floor));
  }
}

double decay_factor(double tau, double dt) {
  if (!(dt > 0.0)) throw std::domain_error("decay_factor: dt must be positive");
  if (!(tau >= 1.5 * dt))
    throw std::domain_error("decay_factor: tau " + std::to_string(tau) +
                            " below stability floor 1.5*dt = " + std::to_string(1.5 * dt));
  return std::exp(-dt / tau);
}

namespace {

// Xavier-uniform scaled by 1/(1 - exp(-dt/tau)). The exponential-Euler update
// feeds currents through a (1 - alpha) gain, so uncompensated weights would
// leave slow layers silent at initialization and the surrogate box would
// never activate.
void xavier_fill(std::vector<double>& w, int fan_in, int fan_out, double gain_correction,
                 Rng& rng) {
  const double bound = gain_correction * std::sqrt(6.0 / (fan_in + fan_out));
  for (auto& x : w) x = rng.uniform(-bound, bound);
}

double input_gain(double tau, double dt) { return 1.0 - std::exp(-dt / tau); }

}  // namespace

std::vector<LayerParams> init_params(const NetworkSpec& spec,
                                     const std::vector<double>& hidden_tau_means,
                                     double tau_std_frac, Rng& rng) {
  spec.validate();
  if (hidden_tau_means.size() != spec.hidden.size())
    throw std::invalid_argument("init_params: one tau mean per hidden layer required");

  std::vector<LayerParams> params;
  params.reserve(spec.hidden.size() + 1);
  const double floor = spec.grid.tau_floor();

  int in_size = spec.input_size;
  for (size_t l = 0; l < spec.hidden.size(); ++l) {
    const LayerSpec& ls = spec.hidden[l];
    LayerParams p;
    p.kind = ls.kind;
    p.in_size = in_size;
    p.out_size = ls.size;
    p.kernel_size = ls.kind == LayerKind::conv ? ls.kernel_size : 1;
    p.dilation = ls.kind == LayerKind::conv ? ls.dilation : 1;
    p.spiking = true;
    p.weights.resize(p.weight_count());
    p.lr_scale = 1.0 / input_gain(hidden_tau_means[l], spec.grid.dt);
    xavier_fill(p.weights, p.kernel_size * p.in_size, p.kernel_size * p.out_size, p.lr_scale,
                rng);
    p.tau = sample_layer_taus(hidden_tau_means[l], ls.size, tau_std_frac, floor, rng);
    p.validate(spec.grid);
    params.push_back(std::move(p));
    in_size = ls.size;
  }

  LayerParams out;
  out.kind = LayerKind::dense;
  out.in_size = in_size;
  out.out_size = spec.output_size;
  out.spiking = false;
  out.weights.resize(out.weight_count());
  out.lr_scale = 1.0 / input_gain(spec.tau_out, spec.grid.dt);
  xavier_fill(out.weights, out.in_size, out.out_size, out.lr_scale, rng);
  out.tau.assign(spec.output_size, spec.tau_out);
  out.validate(spec.grid);
  params.push_back(std::move(out));
  return params;
}

}  // namespace tsnn
