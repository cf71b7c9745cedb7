// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <bit>
#include <bitset>
#include <cmath>
#include <cstring>
#include <random>
#include <set>
#include <string>

#include "hrpp/hash.hpp"
#include "test_util.hpp"

namespace hrpp {
namespace {

// Independent oracle: read the IEEE-754 layout as a 32-character bit string
// (sign | 8 exponent | 23 mantissa) and splice the extracted characters.
std::uint32_t oracle_float_hash(float f, int p) {
  std::uint32_t raw;
  std::memcpy(&raw, &f, sizeof raw);
  const std::string bits = std::bitset<32>(raw).to_string();
  const std::string picked = bits.substr(0, 1) + bits.substr(1, p) + bits.substr(9, p);
  return static_cast<std::uint32_t>(std::stoul(picked, nullptr, 2));
}

HashConfig precision(int p) { return HashConfig{p}; }

TEST(MapFloatToHash, OneAtPrecisionTwo) {
  EXPECT_EQ(oracle_float_hash(1.0f, 2), 4u);  // 0 | 01 | 00
  EXPECT_EQ(map_float_to_hash(1.0f, precision(2)).value, 4u);
}

TEST(MapFloatToHash, MinusOneSetsSignBit) {
  EXPECT_EQ(oracle_float_hash(-1.0f, 2), 20u);  // 1 | 01 | 00
  EXPECT_EQ(map_float_to_hash(-1.0f, precision(2)).value, 20u);
}

TEST(MapFloatToHash, PositiveZeroIsZero) {
  for (int p = 1; p <= 7; ++p) EXPECT_EQ(map_float_to_hash(0.0f, precision(p)).value, 0u);
}

TEST(MapFloatToHash, NegativeZeroHashesApart) {
  for (int p = 1; p <= 7; ++p) EXPECT_EQ(map_float_to_hash(-0.0f, precision(p)).value, 1u << (2 * p));
}

TEST(MapFloatToHash, RejectsNonFinite) {
  for (float f : {NAN, INFINITY, -INFINITY}) {
    try {
      map_float_to_hash(f, precision(3));
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::NonFiniteInput);
    }
  }
}

TEST(MapFloatToHash, RejectsBadPrecision) {
  EXPECT_THROW(map_float_to_hash(1.f, precision(0)), Error);
  EXPECT_THROW(map_float_to_hash(1.f, precision(8)), Error);
}

TEST(MapFloatToHash, MatchesBitStringOracle) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::uint32_t> any_bits;
  int checked = 0;
  while (checked < 20000) {
    const float f = std::bit_cast<float>(any_bits(rng));  // includes denormals
    if (!std::isfinite(f)) continue;
    for (int p = 1; p <= 7; ++p) {
      const auto h = map_float_to_hash(f, precision(p)).value;
      ASSERT_EQ(h, oracle_float_hash(f, p)) << f << " p=" << p;
      ASSERT_LT(h, 1u << (1 + 2 * p));
    }
    ++checked;
  }
}

Ray raw_ray(Vec3 o, Vec3 d) { return Ray{o, d, 0.f, 1.f, RayKind::ClosestHit}; }

TEST(HashRay, ZeroRayGivesZeroKey) {
  EXPECT_EQ(hash_ray(raw_ray({0, 0, 0}, {0, 0, 0}), precision(4)).value, 0u);
}

TEST(HashRay, EqualOriginAndDirectionCancel) {
  // Each lane is 4 xor 4.
  EXPECT_EQ(hash_ray(raw_ray({1, 1, 1}, {1, 1, 1}), precision(2)).value, 0u);
}

TEST(HashRay, LanePairing) {
  // o.x pairs with d.z, o.y with d.y, o.z with d.x.
  const HashConfig cfg = precision(2);
  const PredictorKey k = hash_ray(raw_ray({1, -1, 2}, {0.5f, 0, -1}), cfg);
  EXPECT_EQ(k.lane(0), map_float_to_hash(1.f, cfg).value ^ map_float_to_hash(-1.f, cfg).value);
  EXPECT_EQ(k.lane(1), map_float_to_hash(-1.f, cfg).value ^ map_float_to_hash(0.f, cfg).value);
  EXPECT_EQ(k.lane(2), map_float_to_hash(2.f, cfg).value ^ map_float_to_hash(0.5f, cfg).value);
}

TEST(HashRay, BitsBelowPrecisionDoNotMatter) {
  const float a = 1.0f, b = 1.0f + std::ldexp(1.0f, -20);
  ASSERT_NE(a, b);
  EXPECT_EQ(oracle_float_hash(a, 2), oracle_float_hash(b, 2));
  EXPECT_EQ(hash_ray(raw_ray({a, 0, 0}, {0, 0, 1}), precision(2)),
            hash_ray(raw_ray({b, 0, 0}, {0, 0, 1}), precision(2)));
}

TEST(HashRay, RejectsNonFiniteComponents) {
  EXPECT_THROW(hash_ray(raw_ray({NAN, 0, 0}, {0, 0, 1}), precision(3)), Error);
  EXPECT_THROW(hash_ray(raw_ray({0, 0, 0}, {0, INFINITY, 0}), precision(3)), Error);
}

TEST(HashRay, KeyFitsIn48Bits) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 10000; ++i) {
    const Ray r = testing::random_ray(rng, RayKind::ClosestHit, 100.f);
    EXPECT_EQ(hash_ray(r, precision(7)).value >> 48, 0u);
  }
}

TEST(HashRay, HexFormatting) {
  EXPECT_EQ(to_hex(PredictorKey{0}), "000000000000");
  EXPECT_EQ(to_hex(PredictorKey{0xABCDEF012345ull}), "abcdef012345");
}

TEST(HashProperty, LaneIndependence) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 5000; ++i) {
    Ray r = testing::random_ray(rng, RayKind::ClosestHit);
    const HashConfig cfg = precision(1 + i % 7);
    const PredictorKey a = hash_ray(r, cfg);
    r.origin.x = -r.origin.x;
    const PredictorKey b = hash_ray(r, cfg);
    EXPECT_NE(a.lane(0), b.lane(0));
    EXPECT_EQ(a.lane(1), b.lane(1));
    EXPECT_EQ(a.lane(2), b.lane(2));
  }
}

TEST(HashProperty, Locality) {
  // Randomizing only the mantissa bits below the top p never changes the key.
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<std::uint32_t> any_bits;
  for (int i = 0; i < 5000; ++i) {
    const int p = 1 + i % 7;
    const Ray r = testing::random_ray(rng, RayKind::ClosestHit);
    Ray s = r;
    for (int a = 0; a < 3; ++a) {
      const std::uint32_t low_mask = (1u << (23 - p)) - 1u;
      auto perturb = [&](float f) {
        const std::uint32_t bits = std::bit_cast<std::uint32_t>(f);
        return std::bit_cast<float>((bits & ~low_mask) | (any_bits(rng) & low_mask));
      };
      s.origin[a] = perturb(r.origin[a]);
      s.direction[a] = perturb(r.direction[a]);
    }
    EXPECT_EQ(hash_ray(r, precision(p)), hash_ray(s, precision(p)));
  }
}

TEST(HashProperty, Refinement) {
  std::mt19937_64 rng(41);
  std::vector<std::set<std::uint64_t>> distinct(8);
  for (int i = 0; i < 100000; ++i) {
    const Ray r = testing::random_ray(rng, RayKind::ClosestHit, 4.f);
    for (int p = 1; p <= 7; ++p) {
      const PredictorKey k = hash_ray(r, precision(p));
      distinct[p].insert(k.value);
      if (p > 1) { ASSERT_EQ(coarsen_key(k, p), hash_ray(r, precision(p - 1))); }
    }
  }
  for (int p = 2; p <= 7; ++p) EXPECT_GE(distinct[p].size(), distinct[p - 1].size()) << "p=" << p;
}

TEST(HashProperty, Deterministic) {
  std::mt19937_64 rng(51);
  for (int i = 0; i < 1000; ++i) {
    const Ray r = testing::random_ray(rng, RayKind::HitAny);
    EXPECT_EQ(hash_ray(r, precision(6)), hash_ray(r, precision(6)));
  }
}

}  // namespace
}  // namespace hrpp
