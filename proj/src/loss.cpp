#include "tsnn/loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tsnn {

namespace {

void check_out(std::span<const double> out, int steps, int n_out) {
  if (out.size() != static_cast<size_t>(steps) * n_out)
    throw std::invalid_argument("loss: output tensor must be T x N");
  for (double v : out)
    if (!std::isfinite(v)) throw std::invalid_argument("loss: non-finite output voltage");
}

// log sum exp of a row, max-subtracted
double lse(const double* row, int n) {
  double m = row[0];
  for (int i = 1; i < n; ++i) m = std::max(m, row[i]);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::exp(row[i] - m);
  return m + std::log(s);
}

void softmax_into(const double* row, int n, double* p) {
  double m = row[0];
  for (int i = 1; i < n; ++i) m = std::max(m, row[i]);
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    p[i] = std::exp(row[i] - m);
    s += p[i];
  }
  for (int i = 0; i < n; ++i) p[i] /= s;
}

}  // namespace

void validate_windows(std::span<const Window> windows, int steps, int n_classes) {
  if (windows.empty()) throw std::invalid_argument("windows: empty window list");
  std::vector<Window> sorted(windows.begin(), windows.end());
  std::sort(sorted.begin(), sorted.end(), [](const Window& a, const Window& b) {
    return a.start < b.start;
  });
  int prev_end = 0;
  for (const auto& w : sorted) {
    if (w.start < 0 || w.end > steps || w.start >= w.end)
      throw std::invalid_argument("windows: window out of range or empty");
    if (w.start < prev_end) throw std::invalid_argument("windows: overlapping windows");
    if (w.label < 0 || (n_classes > 0 && w.label >= n_classes))
      throw std::invalid_argument("windows: label out of range");
    prev_end = w.end;
  }
}

double loss_sum(std::span<const double> out, int steps, int n_out, int label) {
  check_out(out, steps, n_out);
  if (label < 0 || label >= n_out) throw std::invalid_argument("loss_sum: label out of range");
  double total = 0.0;
  for (int t = 0; t < steps; ++t) {
    const double* row = out.data() + static_cast<size_t>(t) * n_out;
    total += lse(row, n_out) - row[label];
  }
  return total / steps;
}

void loss_sum_grad(std::span<const double> out, int steps, int n_out, int label,
                   std::span<double> dL_dout) {
  check_out(out, steps, n_out);
  if (dL_dout.size() != out.size()) throw std::invalid_argument("loss_sum_grad: shape mismatch");
  std::vector<double> p(n_out);
  for (int t = 0; t < steps; ++t) {
    const double* row = out.data() + static_cast<size_t>(t) * n_out;
    double* g = dL_dout.data() + static_cast<size_t>(t) * n_out;
    softmax_into(row, n_out, p.data());
    for (int n = 0; n < n_out; ++n) g[n] = (p[n] - (n == label ? 1.0 : 0.0)) / steps;
  }
}

namespace {

// windowed per-neuron max and the (first) step attaining it
void window_max(std::span<const double> out, int n_out, const Window& w, double* v, int* argt) {
  for (int n = 0; n < n_out; ++n) {
    v[n] = -std::numeric_limits<double>::infinity();
    argt[n] = w.start;
  }
  for (int t = w.start; t < w.end; ++t) {
    const double* row = out.data() + static_cast<size_t>(t) * n_out;
    for (int n = 0; n < n_out; ++n) {
      if (row[n] > v[n]) {
        v[n] = row[n];
        argt[n] = t;
      }
    }
  }
}

}  // namespace

double loss_max_windows(std::span<const double> out, int steps, int n_out,
                        std::span<const Window> windows) {
  check_out(out, steps, n_out);
  validate_windows(windows, steps, n_out);
  std::vector<double> v(n_out);
  std::vector<int> argt(n_out);
  double total = 0.0;
  for (const auto& w : windows) {
    window_max(out, n_out, w, v.data(), argt.data());
    total += lse(v.data(), n_out) - v[w.label];
  }
  return total / static_cast<double>(windows.size());
}

void loss_max_windows_grad(std::span<const double> out, int steps, int n_out,
                           std::span<const Window> windows, std::span<double> dL_dout) {
  check_out(out, steps, n_out);
  validate_windows(windows, steps, n_out);
  if (dL_dout.size() != out.size())
    throw std::invalid_argument("loss_max_windows_grad: shape mismatch");
  std::fill(dL_dout.begin(), dL_dout.end(), 0.0);
  std::vector<double> v(n_out), p(n_out);
  std::vector<int> argt(n_out);
  const double inv = 1.0 / static_cast<double>(windows.size());
  for (const auto& w : windows) {
    window_max(out, n_out, w, v.data(), argt.data());
    softmax_into(v.data(), n_out, p.data());
    for (int n = 0; n < n_out; ++n) {
      const double g = (p[n] - (n == w.label ? 1.0 : 0.0)) * inv;
      dL_dout[static_cast<size_t>(argt[n]) * n_out + n] += g;
    }
  }
}

double loss_double_softmax(std::span<const double> out, int steps, int n_out, int label) {
  check_out(out, steps, n_out);
  if (label < 0 || label >= n_out)
    throw std::invalid_argument("loss_double_softmax: label out of range");
  std::vector<double> z(n_out, 0.0), p(n_out);
  for (int t = 0; t < steps; ++t) {
    softmax_into(out.data() + static_cast<size_t>(t) * n_out, n_out, p.data());
    for (int n = 0; n < n_out; ++n) z[n] += p[n];
  }
  return lse(z.data(), n_out) - z[label];
}

void loss_double_softmax_grad(std::span<const double> out, int steps, int n_out, int label,
                              std::span<double> dL_dout) {
  check_out(out, steps, n_out);
  if (dL_dout.size() != out.size())
    throw std::invalid_argument("loss_double_softmax_grad: shape mismatch");
  std::vector<double> z(n_out, 0.0), p(n_out), dz(n_out);
  for (int t = 0; t < steps; ++t) {
    softmax_into(out.data() + static_cast<size_t>(t) * n_out, n_out, p.data());
    for (int n = 0; n < n_out; ++n) z[n] += p[n];
  }
  softmax_into(z.data(), n_out, p.data());
  for (int n = 0; n < n_out; ++n) dz[n] = p[n] - (n == label ? 1.0 : 0.0);
  for (int t = 0; t < steps; ++t) {
    const double* row = out.data() + static_cast<size_t>(t) * n_out;
    double* g = dL_dout.data() + static_cast<size_t>(t) * n_out;
    softmax_into(row, n_out, p.data());
    double dot = 0.0;
    for (int n = 0; n < n_out; ++n) dot += dz[n] * p[n];
    for (int n = 0; n < n_out; ++n) g[n] = p[n] * (dz[n] - dot);
  }
}

double tau_regularizer(std::span<const std::vector<double>> taus_per_layer) {
  double total = 0.0;
  for (const auto& taus : taus_per_layer) {
    if (taus.empty()) continue;
    double mean = 0.0;
    for (double t : taus) mean += t;
    mean /= static_cast<double>(taus.size());
    for (double t : taus) total += (t - mean) * (t - mean);
  }
  return total;
}

void tau_regularizer_grad(std::span<const double> taus, double coeff, std::span<double> grad_out) {
  if (taus.size() != grad_out.size())
    throw std::invalid_argument("tau_regularizer_grad: shape mismatch");
  if (taus.empty()) return;
  double mean = 0.0;
  for (double t : taus) mean += t;
  mean /= static_cast<double>(taus.size());
  for (size_t i = 0; i < taus.size(); ++i) grad_out[i] += coeff * 2.0 * (taus[i] - mean);
}

int predict_sum(std::span<const double> out, int steps, int n_out) {
  check_out(out, steps, n_out);
  std::vector<double> score(n_out, 0.0);
  for (int t = 0; t < steps; ++t) {
    const double* row = out.data() + static_cast<size_t>(t) * n_out;
    const double l = lse(row, n_out);
    for (int n = 0; n < n_out; ++n) score[n] += row[n] - l;
  }
  return static_cast<int>(std::max_element(score.begin(), score.end()) - score.begin());
}

int predict_window(std::span<const double> out, int steps, int n_out, const Window& window) {
  check_out(out, steps, n_out);
  if (window.start < 0 || window.end > steps || window.start >= window.end)
    throw std::invalid_argument("predict_window: window out of range");
  std::vector<double> v(n_out);
  std::vector<int> argt(n_out);
  window_max(out, n_out, window, v.data(), argt.data());
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace tsnn
