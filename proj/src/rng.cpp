#include "shiftlab/rng.hpp"

#include <cmath>
#include <numbers>

#include "shiftlab/errors.hpp"

namespace shiftlab {
namespace {

constexpr uint32_t kMul0 = 0xD2511F53u;
constexpr uint32_t kMul1 = 0xCD9E8D57u;
constexpr uint32_t kBump0 = 0x9E3779B9u;
constexpr uint32_t kBump1 = 0xBB67AE85u;

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xCBF29CE484222325ull;
  for (const char ch : s) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001B3ull;
  }
  return h;
}

inline std::array<uint32_t, 4> philox_block(std::array<uint32_t, 4> ctr,
                                            std::array<uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    const uint64_t p0 = static_cast<uint64_t>(kMul0) * ctr[0];
    const uint64_t p1 = static_cast<uint64_t>(kMul1) * ctr[2];
    const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32);
    const uint32_t lo0 = static_cast<uint32_t>(p0);
    const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32);
    const uint32_t lo1 = static_cast<uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kBump0;
    key[1] += kBump1;
  }
  return ctr;
}

}  // namespace

Philox::Philox(uint64_t seed)
    : seed_(seed),
      key_{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32)} {}

Philox Philox::stream(std::string_view name) const {
  return Philox(splitmix64(seed_ ^ fnv1a64(name)));
}

Philox Philox::stream(uint64_t index) const {
  return Philox(splitmix64(seed_ ^ (index * 0x632BE59BD9B4E019ull + 1)));
}

void Philox::refill() {
  block_ = philox_block(counter_, key_);
  pos_ = 0;
  for (int i = 0; i < 4; ++i) {
    if (++counter_[i] != 0) break;
  }
}

uint32_t Philox::next_u32() {
  if (pos_ >= 4) refill();
  return block_[pos_++];
}

uint64_t Philox::next_u64() {
  const uint64_t lo = next_u32();
  const uint64_t hi = next_u32();
  return (hi << 32) | lo;
}

double Philox::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Philox::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  const double u1 = 1.0 - next_double();  // (0, 1]
  const double u2 = next_double();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  cached_normal_ = r * std::sin(theta);
  has_cached_normal_ = true;
  return r * std::cos(theta);
}

uint64_t Philox::below(uint64_t n) {
  if (n == 0) throw ArgumentError("Philox::below: n must be >= 1");
  if ((n & (n - 1)) == 0) return next_u64() & (n - 1);
  const uint64_t rem = (UINT64_MAX % n + 1) % n;  // 2^64 mod n
  const uint64_t last_ok = UINT64_MAX - rem;
  uint64_t x;
  do {
    x = next_u64();
  } while (x > last_ok);
  return x % n;
}

bool Philox::bernoulli(double p) { return next_double() < p; }

}  // namespace shiftlab
