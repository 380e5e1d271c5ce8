#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace shiftlab {

// Counter-based generator: Philox-4x32 with 10 rounds. A generator is a
// (key, counter) pair; the key is derived from a 64-bit seed, the counter
// increments once per 128-bit block. Streams are split by name or index —
// child keys are a hash mix of the parent key and the stream label — so
// consumers can hold independent, order-insensitive streams (one per
// (dataset, domain, purpose), one per trial, ...) that never interact.
//
// Round function, per block:
//   hi0:lo0 = 0xD2511F53 * c0,  hi1:lo1 = 0xCD9E8D57 * c2
//   c <- { hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0 }
//   k0 += 0x9E3779B9, k1 += 0xBB67AE85
class Philox {
 public:
  explicit Philox(uint64_t seed);

  // Independent child streams; deterministic, order-insensitive.
  Philox stream(std::string_view name) const;
  Philox stream(uint64_t index) const;

  uint32_t next_u32();
  uint64_t next_u64();
  double next_double();         // uniform [0, 1), 53-bit
  double normal();              // standard normal (Box-Muller, pair-cached)
  uint64_t below(uint64_t n);   // uniform [0, n), unbiased; n >= 1
  bool bernoulli(double p);     // next_double() < p

  uint64_t seed() const { return seed_; }

 private:
  void refill();

  uint64_t seed_;
  std::array<uint32_t, 2> key_;
  std::array<uint32_t, 4> counter_{};
  std::array<uint32_t, 4> block_{};
  int pos_ = 4;
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace shiftlab
