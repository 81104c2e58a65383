#include "subregweigh/random.h"

namespace subregweigh {

uint64_t Rng::Uniform(uint64_t bound) {
  // Rejection sampling keeps the result exactly uniform.
  const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

uint64_t SplitMix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

uint64_t DeriveSeed(uint64_t seed, std::string_view label, uint64_t a,
                    uint64_t b) {
  // FNV-1a over the label.
  uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  uint64_t x = SplitMix64(seed ^ h);
  x = SplitMix64(x ^ a);
  x = SplitMix64(x ^ (b + 0x632BE59BD9B4E019ULL));
  return x;
}

}  // namespace subregweigh
