#include "tsnn/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tsnn {

namespace {

void check_floor(const std::vector<double>& taus, double tau_floor) {
  if (tau_floor <= 0.0) return;
  for (double t : taus) {
    if (!(t >= tau_floor))
      throw std::invalid_argument("tau schedule value " + std::to_string(t) +
                                  " violates floor " + std::to_string(tau_floor));
  }
}

}  // namespace

std::vector<double> linear_tau_means(const TauSchedule& sched, double tau_floor) {
  if (sched.layers < 1) throw std::invalid_argument("tau schedule: layers must be >= 1");
  std::vector<double> taus(sched.layers);
  if (sched.shape == TauShape::paper_literal_linear) {
    for (int l = 1; l <= sched.layers; ++l)
      taus[l - 1] = sched.tau_mu + (l - sched.layers / 2.0) * sched.delta_tau / 2.0;
  } else if (sched.layers == 1) {
    taus[0] = sched.tau_mu;
  } else {
    for (int l = 1; l <= sched.layers; ++l)
      taus[l - 1] = sched.tau_mu +
                    (static_cast<double>(l - 1) / (sched.layers - 1) - 0.5) * sched.delta_tau;
  }
  check_floor(taus, tau_floor);
  return taus;
}

std::vector<double> tanh_tau_means(const TauSchedule& sched, double tau_floor) {
  if (sched.layers < 2) throw std::invalid_argument("tanh tau schedule: needs >= 2 layers");
  if (sched.steepness == 0.0) throw std::invalid_argument("tanh tau schedule: steepness must be nonzero");
  const int H = sched.layers;
  std::vector<double> g(H);
  for (int l = 1; l <= H; ++l)
    g[l - 1] = std::tanh(sched.steepness * (static_cast<double>(l) / H - sched.centering));
  const auto [lo_it, hi_it] = std::minmax_element(g.begin(), g.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi - lo > 0.0))
    throw std::invalid_argument("tanh tau schedule: degenerate (all layer values equal)");
  std::vector<double> taus(H);
  for (int l = 0; l < H; ++l) {
    const double mapped = 2.0 * (g[l] - lo) / (hi - lo) - 1.0;
    taus[l] = sched.tau_mu + mapped * sched.delta_tau / 2.0;
  }
  check_floor(taus, tau_floor);
  return taus;
}

std::vector<double> tau_layer_means(const TauSchedule& sched, double tau_floor) {
  switch (sched.shape) {
    case TauShape::homogeneous: {
      if (sched.layers < 1) throw std::invalid_argument("tau schedule: layers must be >= 1");
      std::vector<double> taus(sched.layers, sched.tau_mu);
      check_floor(taus, tau_floor);
      return taus;
    }
    case TauShape::linear:
    case TauShape::paper_literal_linear:
      return linear_tau_means(sched, tau_floor);
    case TauShape::tanh_shape:
      return tanh_tau_means(sched, tau_floor);
  }
  throw std::logic_error("tau_layer_means: unknown shape");
}

std::vector<double> sample_layer_taus(double mean, int n, double std_frac, double tau_floor,
                                      Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample_layer_taus: n must be >= 1");
  if (tau_floor > 0.0 && !(mean >= tau_floor))
    throw std::invalid_argument("sample_layer_taus: mean below tau floor");
  std::vector<double> taus(n);
  for (auto& t : taus) t = std::max(rng.normal(mean, std_frac * mean), tau_floor);
  return taus;
}

namespace {

std::vector<int> int_ramp(int mean, int delta, int layers, const char* what) {
  std::vector<int> vals(layers);
  if (layers == 1) {
    vals[0] = mean;
  } else {
    for (int l = 1; l <= layers; ++l) {
      const double x = mean + (static_cast<double>(l - 1) / (layers - 1) - 0.5) * delta;
      vals[l - 1] = static_cast<int>(std::round(x));  // round half away from zero
    }
  }
  for (int v : vals) {
    if (v < 1)
      throw std::invalid_argument(std::string(what) + " schedule produced value < 1");
  }
  return vals;
}

}  // namespace

std::pair<std::vector<int>, std::vector<int>> conv_schedules(const ConvSchedule& sched) {
  if (sched.layers < 1) throw std::invalid_argument("conv schedule: layers must be >= 1");
  return {int_ramp(sched.mean_kernel, sched.delta_kernel, sched.layers, "kernel"),
          int_ramp(sched.mean_dilation, sched.delta_dilation, sched.layers, "dilation")};
}

}  // namespace tsnn
