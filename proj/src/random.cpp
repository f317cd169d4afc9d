#include "dpcopula/random.hpp"

#include <cmath>
#include <numbers>

#include "dpcopula/errors.hpp"

namespace dpcopula {

namespace {
constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t x) {
  // splitmix64 finalizer
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

std::uint64_t hash_label(std::string_view label) {
  std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

CounterRng CounterRng::for_label(std::uint64_t master_seed, std::string_view label) {
  return CounterRng(mix64(mix64(master_seed + kGamma) ^ hash_label(label)));
}

std::uint64_t CounterRng::at(std::uint64_t index) const {
  return mix64(key_ + (index + 1) * kGamma);
}

double CounterRng::uniform_at(std::uint64_t index) const {
  // 53 random bits, shifted by half an ulp so 0 and 1 are never produced
  return (static_cast<double>(at(index) >> 11) + 0.5) * 0x1.0p-53;
}

double sample_laplace(double scale, CounterRng& rng) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw ConfigError("Laplace scale must be positive and finite");
  }
  const double u = rng.next_uniform() - 0.5;
  return -scale * std::copysign(1.0, u) * std::log1p(-2.0 * std::fabs(u));
}

double standard_normal_at(const CounterRng& rng, std::uint64_t index) {
  const double u1 = rng.uniform_at(2 * index);
  const double u2 = rng.uniform_at(2 * index + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double NoiseSource::Stream::laplace(double scale) {
  if (zero_) {
    if (!(scale > 0.0)) throw ConfigError("Laplace scale must be positive and finite");
    return 0.0;
  }
  return sample_laplace(scale, rng_);
}

NoiseSource::Stream NoiseSource::stream(std::string_view label) const {
  return Stream(CounterRng::for_label(seed_, label), zero_);
}

}  // namespace dpcopula
