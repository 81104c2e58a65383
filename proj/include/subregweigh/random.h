#ifndef SUBREGWEIGH_RANDOM_H_
#define SUBREGWEIGH_RANDOM_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace subregweigh {

// Seeded generator with distribution code of our own, so a seed produces the
// same stream with every standard library (std:: distributions are
// implementation-defined).
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t NextU64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of resolution.
  double NextDouble() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // True with probability p. p <= 0 never draws true, p >= 1 always does,
  // but a value is consumed from the stream in every case.
  bool Bernoulli(double p) { return NextDouble() < p; }

  // Uniform integer in [0, bound). bound must be positive.
  uint64_t Uniform(uint64_t bound);

 private:
  std::mt19937_64 engine_;
};

uint64_t SplitMix64(uint64_t x);

// Derives an independent stream seed from a base seed, a stage label and up
// to two indices. Stable across platforms and releases.
uint64_t DeriveSeed(uint64_t seed, std::string_view label, uint64_t a = 0,
                    uint64_t b = 0);

}  // namespace subregweigh

#endif  // SUBREGWEIGH_RANDOM_H_
