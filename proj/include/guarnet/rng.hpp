#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace guarnet {

// Splittable deterministic RNG built on SplitMix64. Streams are derived by
// hashing a tag into the parent state, so independent generation phases can
// be reordered or re-run without perturbing each other. Distributions are
// implemented explicitly to keep output independent of the standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed * 0x9E3779B97F4A7C15ULL + 0x2545F4914F6CDD1DULL) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Child stream keyed by a tag (and optional index); independent of calls
  // made on this stream afterwards.
  Rng split(std::string_view tag, std::uint64_t index = 0) const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : tag) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
    h ^= index + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
    return Rng(state_ ^ h);
  }

  // Uniform in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n) {
    // Rejection sampling to avoid modulo bias.
    std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // Uniform integer in [lo, hi] inclusive.
  std::int64_t uniform_range(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(uniform_int(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  bool bernoulli(double p) { return next_double() < p; }

  double exponential(double mean) { return -mean * std::log1p(-next_double()); }

  double normal(double mu = 0.0, double sigma = 1.0) {
    // Box-Muller; one draw per call keeps the stream position predictable.
    double u1 = 1.0 - next_double();
    double u2 = next_double();
    return mu + sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  // Weighted index draw; weights need not be normalized.
  template <typename Container>
  std::size_t weighted_index(const Container& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double r = next_double() * total;
    double acc = 0.0;
    std::size_t last = 0;
    std::size_t i = 0;
    for (double w : weights) {
      acc += w;
      if (r < acc) return i;
      last = i++;
    }
    return last;
  }

 private:
  std::uint64_t state_;
};

}  // namespace guarnet
