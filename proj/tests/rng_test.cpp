#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "shiftlab/errors.hpp"
#include "shiftlab/rng.hpp"

using namespace shiftlab;

TEST_CASE("same seed reproduces the sequence, different seeds diverge") {
  Philox a(42), b(42), c(43);
  bool all_equal = true, any_equal_c = false;
  for (int i = 0; i < 256; ++i) {
    const uint32_t va = a.next_u32();
    all_equal = all_equal && va == b.next_u32();
    any_equal_c = any_equal_c || va == c.next_u32();
  }
  CHECK(all_equal);
  // a 256-long coincidence streak against seed 43 would be astronomical
  Philox a2(42), c2(43);
  int matches = 0;
  for (int i = 0; i < 256; ++i) matches += a2.next_u32() == c2.next_u32();
  CHECK(matches < 8);
}

TEST_CASE("streams are independent of sibling consumption order") {
  Philox root(7);
  Philox s1 = root.stream("alpha");
  Philox s2 = root.stream("beta");
  const uint64_t first_s2 = Philox(7).stream("beta").next_u64();
  // consuming s1 heavily must not disturb s2
  for (int i = 0; i < 1000; ++i) s1.next_u64();
  CHECK(s2.next_u64() == first_s2);
  // named and indexed streams are stable across instances
  CHECK(Philox(7).stream("alpha").next_u64() ==
        Philox(7).stream("alpha").next_u64());
  CHECK(Philox(7).stream(uint64_t(3)).next_u64() ==
        Philox(7).stream(uint64_t(3)).next_u64());
  CHECK(Philox(7).stream(uint64_t(3)).next_u64() !=
        Philox(7).stream(uint64_t(4)).next_u64());
}

TEST_CASE("stream keys rarely collide across indices") {
  std::set<uint64_t> firsts;
  Philox root(1);
  for (uint64_t i = 0; i < 4096; ++i) {
    firsts.insert(root.stream(i).next_u64());
  }
  CHECK(firsts.size() == 4096);
}

TEST_CASE("uniform doubles have the right moments") {
  Philox rng(101);
  const int n = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.next_double();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
    sumsq += u * u;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean - 0.5) < 0.005);
  CHECK(std::abs(var - 1.0 / 12.0) < 0.005);
}

TEST_CASE("normal() has unit moments") {
  Philox rng(102);
  const int n = 100000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sumsq += z * z;
  }
  const double mean = sum / n;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(sumsq / n - mean * mean - 1.0) < 0.05);
}

TEST_CASE("below() is uniform and in range") {
  Philox rng(103);
  std::vector<int> counts(10, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const uint64_t v = rng.below(10);
    REQUIRE(v < 10);
    counts[v]++;
  }
  for (const int c : counts) {
    CHECK(std::abs(c - n / 10) < n / 10 * 0.05);
  }
  // powers of two take the mask path
  for (int i = 0; i < 1000; ++i) CHECK(rng.below(8) < 8);
  CHECK_THROWS_AS(rng.below(0), ArgumentError);
}

TEST_CASE("bernoulli rate") {
  Philox rng(104);
  int hits = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) hits += rng.bernoulli(0.25);
  CHECK(std::abs(hits / double(n) - 0.25) < 0.006);
}

TEST_CASE("zero-key block matches the philox4x32-10 known answer") {
  // Reference vector for counter 0, key 0. Any change here silently
  // invalidates every dataset and trial seed downstream.
  Philox rng(0);
  CHECK(rng.next_u32() == 0x6627e8d5u);
  CHECK(rng.next_u32() == 0xe169c58du);
  CHECK(rng.next_u32() == 0xbc57ac4cu);
  CHECK(rng.next_u32() == 0x9b00dbd8u);
  // u64s pair consecutive words little-end first
  Philox rng0(0);
  CHECK(rng0.next_u64() == ((uint64_t(0xe169c58du) << 32) | 0x6627e8d5u));
  CHECK(rng0.next_u64() == ((uint64_t(0x9b00dbd8u) << 32) | 0xbc57ac4cu));
  // named streams are stable
  CHECK(Philox(42).stream("alpha").next_u64() == 12303777225636314253ull);
}
