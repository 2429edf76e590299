#include "tsnn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "tsnn/bytes.hpp"

namespace tsnn {

void SpikeDataset::validate() const {
  grid.validate();
  if (channels < 1 || n_samples < 0) throw std::invalid_argument("SpikeDataset: bad shape");
  if (data.size() != static_cast<size_t>(n_samples) * grid.steps * channels)
    throw std::invalid_argument("SpikeDataset: data size mismatch");
  if (per_window) {
    if (windows.size() != static_cast<size_t>(n_samples))
      throw std::invalid_argument("SpikeDataset: window list size mismatch");
    for (const auto& w : windows) validate_windows(w, grid.steps, n_classes);
  } else {
    if (labels.size() != static_cast<size_t>(n_samples))
      throw std::invalid_argument("SpikeDataset: label count mismatch");
    for (uint32_t l : labels)
      if (l >= static_cast<uint32_t>(n_classes))
        throw std::invalid_argument("SpikeDataset: label out of class range");
  }
}

void MtsXorConfig::validate() const {
  if (!(dt > 0.0) || !(duration > 0.0)) throw std::invalid_argument("mtsxor: bad grid");
  if (neurons_per_channel < 1) throw std::invalid_argument("mtsxor: neurons_per_channel >= 1");
  if (n_cues_b < 1) throw std::invalid_argument("mtsxor: n_cues_b >= 1");
  if (rate_active < 0 || rate_inactive < 0 || background_rate < 0)
    throw std::invalid_argument("mtsxor: rates must be >= 0");
  if (!(rate_active > rate_inactive))
    throw std::invalid_argument("mtsxor: rate_active must exceed rate_inactive");
  const int period = cue_steps() + gap_steps();
  const int last_end = period * n_cues_b + cue_steps();
  if (cue_steps() < 1) throw std::invalid_argument("mtsxor: cue shorter than one step");
  if (last_end > steps())
    throw std::invalid_argument("mtsxor: cue windows overflow the sample duration");
}

SpikeDataset mtsxor_generate(const MtsXorConfig& config, int n_samples, uint64_t seed) {
  config.validate();
  if (n_samples < 0) throw std::invalid_argument("mtsxor_generate: n_samples >= 0");

  SpikeDataset ds;
  ds.grid = {config.dt, config.steps()};
  ds.channels = config.channels();
  ds.n_samples = n_samples;
  ds.n_classes = 2;
  ds.per_window = true;
  ds.data.assign(static_cast<size_t>(n_samples) * ds.grid.steps * ds.channels, 0);
  ds.windows.resize(n_samples);

  const int npc = config.neurons_per_channel;
  const int T = ds.grid.steps;
  const int cue = config.cue_steps();
  const int period = cue + config.gap_steps();

  for (int i = 0; i < n_samples; ++i) {
    Rng rng = Rng::stream(seed, {0x6d74735full, static_cast<uint64_t>(i)});
    const int value_a = static_cast<int>(rng.uniform_int(2));
    std::vector<int> value_b(config.n_cues_b);
    auto& wins = ds.windows[i];
    wins.resize(config.n_cues_b);
    for (int c = 0; c < config.n_cues_b; ++c) {
      value_b[c] = static_cast<int>(rng.uniform_int(2));
      const int start = period * (c + 1);
      wins[c] = {start, start + cue, value_a ^ value_b[c]};
    }

    uint8_t* sample = ds.data.data() + static_cast<size_t>(i) * T * ds.channels;
    for (int t = 0; t < T; ++t) {
      double rate_a = config.background_rate;
      double rate_b = config.background_rate;
      if (t < cue) rate_a += value_a ? config.rate_active : config.rate_inactive;
      if (t >= period) {
        const int c = t / period - 1;
        if (c < config.n_cues_b && t - period * (c + 1) < cue)
          rate_b += value_b[c] ? config.rate_active : config.rate_inactive;
      }
      uint8_t* row = sample + static_cast<size_t>(t) * ds.channels;
      for (int ch = 0; ch < ds.channels; ++ch) {
        const double rate = ch < npc ? rate_a : rate_b;
        const long count = rate > 0.0 ? rng.poisson(rate * config.dt) : 0;
        row[ch] = static_cast<uint8_t>(std::min<long>(count, 255));
      }
    }
  }
  return ds;
}

std::vector<uint8_t> bin_events(std::span<const double> times, std::span<const int> channels,
                                const SimGrid& grid, int n_channels) {
  grid.validate();
  if (times.size() != channels.size())
    throw std::invalid_argument("bin_events: times/channels length mismatch");
  if (n_channels < 1) throw std::invalid_argument("bin_events: n_channels >= 1");
  std::vector<uint8_t> counts(static_cast<size_t>(grid.steps) * n_channels, 0);
  for (size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    if (t < 0.0) throw std::invalid_argument("bin_events: negative event time");
    const int ch = channels[i];
    if (ch < 0 || ch >= n_channels) throw std::invalid_argument("bin_events: channel out of range");
    const auto bin = static_cast<long>(std::floor(t / grid.dt));
    if (bin >= grid.steps) continue;  // beyond the grid, dropped
    uint8_t& slot = counts[static_cast<size_t>(bin) * n_channels + ch];
    if (slot < 255) ++slot;
  }
  return counts;
}

namespace {
constexpr char kCacheMagic[4] = {'T', 'S', 'N', 'C'};
constexpr uint32_t kCacheVersion = 1;
}  // namespace

void write_cache(const SpikeDataset& ds, const std::string& path) {
  ds.validate();
  uint32_t n_windows = 0;
  if (ds.per_window) {
    n_windows = ds.n_samples > 0 ? static_cast<uint32_t>(ds.windows[0].size()) : 0;
    for (const auto& w : ds.windows)
      if (w.size() != n_windows)
        throw std::invalid_argument("write_cache: per-window mode requires a uniform window count");
  }

  std::vector<uint8_t> payload;
  payload.reserve(ds.data.size() + 16 * ds.n_samples);
  payload.insert(payload.end(), ds.data.begin(), ds.data.end());
  const auto put_u32 = [&payload](uint32_t v) {
    payload.push_back(static_cast<uint8_t>(v));
    payload.push_back(static_cast<uint8_t>(v >> 8));
    payload.push_back(static_cast<uint8_t>(v >> 16));
    payload.push_back(static_cast<uint8_t>(v >> 24));
  };
  if (ds.per_window) {
    for (const auto& wins : ds.windows)
      for (const auto& w : wins) {
        put_u32(static_cast<uint32_t>(w.start));
        put_u32(static_cast<uint32_t>(w.end));
        put_u32(static_cast<uint32_t>(w.label));
      }
  } else {
    for (uint32_t l : ds.labels) put_u32(l);
  }

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("write_cache: cannot open " + path);
  ByteWriter w(os);
  w.magic(kCacheMagic);
  w.u32(kCacheVersion);
  w.u32(static_cast<uint32_t>(ds.n_samples));
  w.u32(static_cast<uint32_t>(ds.grid.steps));
  w.u32(static_cast<uint32_t>(ds.channels));
  w.u8(ds.per_window ? 1 : 0);
  if (ds.per_window) w.u32(n_windows);
  w.bytes(payload);
  w.u32(crc32(payload));
  if (!os) throw std::runtime_error("write_cache: write failed for " + path);
}

SpikeDataset read_cache(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_cache: cannot open " + path);
  ByteReader r(is);
  r.expect_magic(kCacheMagic, "read_cache");
  const uint32_t version = r.u32();
  if (version != kCacheVersion)
    throw std::runtime_error("read_cache: unsupported version " + std::to_string(version));

  SpikeDataset ds;
  ds.n_samples = static_cast<int>(r.u32());
  ds.grid.steps = static_cast<int>(r.u32());
  ds.channels = static_cast<int>(r.u32());
  // dt is not part of the container; the consumer's grid supplies it.
  ds.grid.dt = 0.01;
  const uint8_t label_mode = r.u8();
  if (label_mode > 1) throw std::runtime_error("read_cache: bad label mode");
  ds.per_window = label_mode == 1;
  uint32_t n_windows = 0;
  if (ds.per_window) n_windows = r.u32();

  const size_t count_bytes = static_cast<size_t>(ds.n_samples) * ds.grid.steps * ds.channels;
  const size_t label_bytes = ds.per_window
                                 ? static_cast<size_t>(ds.n_samples) * n_windows * 12
                                 : static_cast<size_t>(ds.n_samples) * 4;
  std::vector<uint8_t> payload(count_bytes + label_bytes);
  r.bytes(payload);
  const uint32_t stored_crc = r.u32();
  const uint32_t actual_crc = crc32(payload);
  if (stored_crc != actual_crc) throw std::runtime_error("read_cache: checksum failure");

  ds.data.assign(payload.begin(), payload.begin() + count_bytes);
  const auto get_u32 = [&payload](size_t off) {
    return static_cast<uint32_t>(payload[off]) | static_cast<uint32_t>(payload[off + 1]) << 8 |
           static_cast<uint32_t>(payload[off + 2]) << 16 |
           static_cast<uint32_t>(payload[off + 3]) << 24;
  };
  uint32_t max_label = 0;
  if (ds.per_window) {
    ds.windows.resize(ds.n_samples);
    size_t off = count_bytes;
    for (int i = 0; i < ds.n_samples; ++i) {
      auto& wins = ds.windows[i];
      wins.resize(n_windows);
      for (uint32_t k = 0; k < n_windows; ++k) {
        wins[k].start = static_cast<int>(get_u32(off));
        wins[k].end = static_cast<int>(get_u32(off + 4));
        wins[k].label = static_cast<int>(get_u32(off + 8));
        max_label = std::max(max_label, static_cast<uint32_t>(wins[k].label));
        off += 12;
      }
    }
  } else {
    ds.labels.resize(ds.n_samples);
    size_t off = count_bytes;
    for (int i = 0; i < ds.n_samples; ++i, off += 4) {
      ds.labels[i] = get_u32(off);
      max_label = std::max(max_label, ds.labels[i]);
    }
  }
  ds.n_classes = static_cast<int>(max_label) + 1;
  ds.validate();
  return ds;
}

std::vector<uint8_t> augment_freq_shift(std::span<const uint8_t> sample, int steps, int channels,
                                        Rng& rng) {
  if (sample.size() != static_cast<size_t>(steps) * channels)
    throw std::invalid_argument("augment_freq_shift: shape mismatch");
  const long magnitude = std::lround(rng.normal(10.0, 5.0));
  const long shift = rng.bernoulli(0.5) ? -magnitude : magnitude;
  std::vector<uint8_t> out(sample.size(), 0);
  for (int t = 0; t < steps; ++t) {
    const uint8_t* src = sample.data() + static_cast<size_t>(t) * channels;
    uint8_t* dst = out.data() + static_cast<size_t>(t) * channels;
    for (int c = 0; c < channels; ++c) {
      const long from = c - shift;
      if (from >= 0 && from < channels) dst[c] = src[from];
    }
  }
  return out;
}

std::vector<uint8_t> latency_encode(std::span<const double> values, int t_steps, bool skip_zero) {
  if (t_steps < 1) throw std::invalid_argument("latency_encode: t_steps >= 1");
  const int channels = static_cast<int>(values.size());
  std::vector<uint8_t> out(static_cast<size_t>(t_steps) * channels, 0);
  for (int c = 0; c < channels; ++c) {
    const double v = values[c];
    if (!(v >= 0.0 && v <= 1.0))
      throw std::invalid_argument("latency_encode: values must lie in [0, 1]");
    if (skip_zero && v == 0.0) continue;
    const auto step = static_cast<long>(std::round((1.0 - v) * (t_steps - 1)));
    out[static_cast<size_t>(step) * channels + c] = 1;
  }
  return out;
}

}  // namespace tsnn
