#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

// Deterministic random source. The engine is std::mt19937_64 (bit-exact by
// the standard); the distribution transforms are written out by hand because
// std::uniform_int_distribution and friends are implementation-defined, which
// would break the byte-identical-replay guarantee across standard libraries.

namespace shpcn {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t u64() { return gen_(); }

  // Unbiased integer in [0, n). Rejection sampling on the top chunk.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = gen_();
    } while (v >= limit);
    return v % n;
  }

  // Integer in [lo, hi], inclusive.
  std::int64_t range(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  // Uniform double in [0, 1) with 53 random bits.
  double real01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Exponential with the given mean; 0 is possible, +inf is not.
  double exponential(double mean) { return -mean * std::log1p(-real01()); }

  // Standard Box-Muller; the spare draw is cached, which keeps the stream
  // deterministic as long as call order is fixed.
  double normal(double mu, double sigma) {
    if (have_spare_) {
      have_spare_ = false;
      return mu + sigma * spare_;
    }
    double u1, u2;
    do {
      u1 = real01();
    } while (u1 == 0.0);
    u2 = real01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return mu + sigma * r * std::cos(a);
  }

  // Index draw proportional to non-negative weights (at least one positive).
  std::size_t weighted_pick(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double x = real01() * total;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      x -= weights[i];
      if (x < 0.0) return i;
    }
    return weights.empty() ? 0 : weights.size() - 1;
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace shpcn
