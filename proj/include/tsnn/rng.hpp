#pragma once

#include <cstdint>
#include <initializer_list>

namespace tsnn {

// Deterministic, platform-independent random source. The standard library
// engines are portable but its distributions are not, so the distributions
// here are hand-rolled (Box-Muller normal, Knuth poisson) to guarantee
// bit-identical streams on every platform.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  // Derives an independent substream from (seed, path). Streams with
  // different paths are statistically independent; the same (seed, path)
  // always yields the same stream. Used to keep parallel work deterministic.
  static Rng stream(uint64_t seed, std::initializer_list<uint64_t> path);

  uint64_t next_u64();

  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);

  // Uniform integer in [0, bound), bound > 0. Unbiased (Lemire rejection).
  uint64_t uniform_int(uint64_t bound);

  bool bernoulli(double p);

  double normal();  // standard normal
  double normal(double mean, double stddev);

  // Exact Poisson sampling; large means are split into chunks so the
  // multiplication method never underflows.
  long poisson(double mean);

 private:
  uint64_t state_[4];
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

// SplitMix64 scramble; used for seeding and stream derivation.
uint64_t mix64(uint64_t x);

// The seed Rng::stream(seed, path) constructs its engine from. Exposed so
// callers can derive stable sub-seeds with the same formula.
uint64_t derive_seed(uint64_t seed, std::initializer_list<uint64_t> path);

}  // namespace tsnn
