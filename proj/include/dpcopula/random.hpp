#pragma once

#include <cstdint>
#include <string_view>

namespace dpcopula {

/// Counter-based generator: the i-th output is a pure function of (key, i).
///
/// Every randomized mechanism owns a stream whose key is derived from the master
/// seed and the mechanism's label, so results do not depend on the order in
/// which mechanisms are scheduled across threads.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0) : key_(key), counter_(counter) {}

  /// Stream for a labelled mechanism under a master seed.
  static CounterRng for_label(std::uint64_t master_seed, std::string_view label);

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64() { return at(counter_++); }
  /// Uniform on the open interval (0, 1).
  double next_uniform() { return uniform_at(counter_++); }

  std::uint64_t at(std::uint64_t index) const;
  double uniform_at(std::uint64_t index) const;

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

std::uint64_t mix64(std::uint64_t x);
std::uint64_t hash_label(std::string_view label);

/// One draw from Lap(scale) by inverting the CDF. Throws ConfigError for scale <= 0.
double sample_laplace(double scale, CounterRng& rng);

/// Standard normal variate tied to `index` (Box-Muller on the uniforms at 2*index and 2*index+1).
double standard_normal_at(const CounterRng& rng, std::uint64_t index);

/// Source of Laplace noise for the privacy mechanisms.
///
/// `unsafe_zero()` turns every draw into 0 and exists only for tests and the
/// explicitly unsafe diagnostics; output produced with it is not private.
class NoiseSource {
 public:
  static NoiseSource laplace(std::uint64_t master_seed) { return NoiseSource(master_seed, false); }
  static NoiseSource unsafe_zero() { return NoiseSource(0, true); }

  class Stream {
   public:
    double laplace(double scale);
    bool zero() const { return zero_; }

   private:
    friend class NoiseSource;
    Stream(CounterRng rng, bool zero) : rng_(rng), zero_(zero) {}
    CounterRng rng_;
    bool zero_;
  };

  Stream stream(std::string_view label) const;
  bool is_zero() const { return zero_; }
  std::uint64_t master_seed() const { return seed_; }

 private:
  NoiseSource(std::uint64_t seed, bool zero) : seed_(seed), zero_(zero) {}
  std::uint64_t seed_;
  bool zero_;
};

}  // namespace dpcopula
