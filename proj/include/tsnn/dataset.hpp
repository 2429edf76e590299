#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tsnn/loss.hpp"
#include "tsnn/network.hpp"
#include "tsnn/rng.hpp"

namespace tsnn {

// Binned spike tensors with per-sample labels or per-window label spans.
// data is row-major n_samples x T x channels, uint8 spike counts.
struct SpikeDataset {
  SimGrid grid;
  int channels = 0;
  int n_samples = 0;
  int n_classes = 0;
  bool per_window = false;
  std::vector<uint8_t> data;
  std::vector<uint32_t> labels;               // per-sample mode
  std::vector<std::vector<Window>> windows;   // per-window mode

  std::span<const uint8_t> sample(int i) const {
    const size_t stride = static_cast<size_t>(grid.steps) * channels;
    return {data.data() + stride * i, stride};
  }
  void validate() const;
};

// Multi-time-scale XOR generator settings. Channel A presents one cue at
// t = 0; Channel B presents n_cues_b cues separated by `gap`; each window's
// label is XOR(value_A, value_B_i). Values 0/1 are drawn uniformly; active
// populations fire Poisson at rate_active, inactive at rate_inactive, and all
// channels carry independent Poisson background for the full duration.
struct MtsXorConfig {
  double dt = 0.01;          // seconds
  double duration = 1.0;     // seconds
  int neurons_per_channel = 10;
  double cue_duration = 0.1;  // seconds
  double gap = 0.05;          // seconds
  int n_cues_b = 5;
  double rate_active = 100.0;    // Hz, cue value 1
  double rate_inactive = 0.0;    // Hz, cue value 0
  double background_rate = 5.0;  // Hz, all channels

  int steps() const { return static_cast<int>(duration / dt + 0.5); }
  int cue_steps() const { return static_cast<int>(cue_duration / dt + 0.5); }
  int gap_steps() const { return static_cast<int>(gap / dt + 0.5); }
  int channels() const { return 2 * neurons_per_channel; }
  void validate() const;
};

SpikeDataset mtsxor_generate(const MtsXorConfig& config, int n_samples, uint64_t seed);

// Histogram of events onto the grid: count per (floor(t/dt), channel).
// Events at or beyond steps*dt are dropped; counts saturate at 255.
// Throws on negative times or out-of-range channels.
std::vector<uint8_t> bin_events(std::span<const double> times, std::span<const int> channels,
                                const SimGrid& grid, int n_channels);

// Dense cache container ("TSNC"): header, u8 count payload, label payload,
// CRC-32 trailer; all integers little-endian. Round trips are bit exact.
void write_cache(const SpikeDataset& ds, const std::string& path);
SpikeDataset read_cache(const std::string& path);

// Frequency-shift augmentation: draw shift magnitude round(Normal(10, 5)),
// flip its sign with probability 1/2, move channel c to c + shift, zero-pad
// the vacated channels and drop the ones pushed outside. Shape-preserving;
// never creates spikes.
std::vector<uint8_t> augment_freq_shift(std::span<const uint8_t> sample, int steps, int channels,
                                        Rng& rng);

// Latency coding: one spike per channel at step round((1 - value) * (T-1)).
// With skip_zero set, a value of exactly 0 emits no spike.
std::vector<uint8_t> latency_encode(std::span<const double> values, int t_steps, bool skip_zero);

}  // namespace tsnn
