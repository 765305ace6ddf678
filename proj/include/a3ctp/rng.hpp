#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>

namespace a3ctp {

// Seeded generator used for every random decision in the library. Only the
// raw mt19937_64 stream is consumed; the distribution helpers below are
// written out so that results do not depend on the standard library vendor.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : engine_(seed) {}

  uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), rejection sampled to avoid modulo bias.
  size_t below(size_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: empty range");
    const uint64_t bound = static_cast<uint64_t>(n);
    const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return static_cast<size_t>(x % bound);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Draws an index from a discrete distribution given by `probs`.
  size_t categorical(std::span<const double> probs) {
    if (probs.empty()) throw std::invalid_argument("Rng::categorical: empty distribution");
    const double u = uniform();
    double acc = 0.0;
    for (size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return i;
    }
    // rounding left u above the final cumulative sum
    for (size_t i = probs.size(); i-- > 0;)
      if (probs[i] > 0.0) return i;
    return probs.size() - 1;
  }

 private:
  std::mt19937_64 engine_;
};

// splitmix64 finalizer; derives independent stream seeds from a run seed.
inline uint64_t derive_seed(uint64_t base, uint64_t stream) {
  uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace a3ctp
