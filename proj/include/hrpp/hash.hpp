// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>

#include "hrpp/error.hpp"
#include "hrpp/geom.hpp"

namespace hrpp {

struct HashConfig {
  int precision_bits = 6;

  static constexpr int kMinPrecision = 1;
  static constexpr int kMaxPrecision = 7;

  constexpr bool valid() const {
    return precision_bits >= kMinPrecision && precision_bits <= kMaxPrecision;
  }
  /// Width of one per-float hash: sign + p exponent bits + p mantissa bits.
  constexpr int float_hash_bits() const { return 1 + 2 * precision_bits; }
};

inline void check(const HashConfig& cfg) {
  if (!cfg.valid())
    throw Error(ErrorKind::InvalidArgument,
                "hash precision must be in [1, 7], got " + std::to_string(cfg.precision_bits));
}

struct FloatHash {
  std::uint16_t value = 0;
  friend constexpr bool operator==(FloatHash, FloatHash) = default;
};

struct PredictorKey {
  std::uint64_t value = 0;

  static constexpr int kLaneBits = 16;
  static constexpr std::uint64_t kLaneMask = 0xFFFF;
  static constexpr std::uint64_t kKeyMask = 0xFFFF'FFFF'FFFFull;

  constexpr std::uint16_t lane(int k) const {
    return static_cast<std::uint16_t>((value >> (kLaneBits * k)) & kLaneMask);
  }
  friend constexpr bool operator==(PredictorKey, PredictorKey) = default;
  friend constexpr auto operator<=>(PredictorKey, PredictorKey) = default;
};

struct PredictorKeyHash {
  std::size_t operator()(PredictorKey k) const noexcept {
    // splitmix64 finalizer; keys are highly structured so std::hash identity is a poor bucket spread
    std::uint64_t z = k.value + 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return static_cast<std::size_t>(z ^ (z >> 31));
  }
};

/// Which direction component is xor-ed into each origin lane:
/// lane0 = o.x ^ d.z, lane1 = o.y ^ d.y, lane2 = o.z ^ d.x.
inline constexpr int kLaneDirectionAxis[3] = {2, 1, 0};

/// Packs the sign bit, the top p exponent bits and the top p mantissa bits of
/// an IEEE-754 single as `sign | exponent | mantissa` (sign highest).
inline FloatHash map_float_to_hash(float f, const HashConfig& cfg) {
  if (!std::isfinite(f)) throw Error(ErrorKind::NonFiniteInput, "cannot hash a NaN or infinite float");
  check(cfg);
  const int p = cfg.precision_bits;
  const std::uint32_t bits = std::bit_cast<std::uint32_t>(f);
  const std::uint32_t sign = bits >> 31;
  const std::uint32_t exponent = (bits >> 23) & 0xFFu;
  const std::uint32_t mask = (1u << p) - 1u;
  const std::uint32_t exp_top = exponent >> (8 - p);
  const std::uint32_t man_top = (bits >> (23 - p)) & mask;
  return FloatHash{static_cast<std::uint16_t>((sign << (2 * p)) | (exp_top << p) | man_top)};
}

inline PredictorKey hash_ray(const Ray& ray, const HashConfig& cfg) {
  std::uint64_t key = 0;
  for (int lane = 0; lane < 3; ++lane) {
    const std::uint16_t o = map_float_to_hash(ray.origin[lane], cfg).value;
    const std::uint16_t d = map_float_to_hash(ray.direction[kLaneDirectionAxis[lane]], cfg).value;
    key |= static_cast<std::uint64_t>(o ^ d) << (PredictorKey::kLaneBits * lane);
  }
  return PredictorKey{key};
}

/// Maps a key built at precision p to the key the same ray has at p - 1, by
/// dropping the lowest extracted exponent and mantissa bit in every lane.
/// Exact because xor acts bitwise.
inline PredictorKey coarsen_key(PredictorKey key, int from_precision) {
  if (from_precision <= HashConfig::kMinPrecision || from_precision > HashConfig::kMaxPrecision)
    throw Error(ErrorKind::InvalidArgument, "coarsen_key needs precision in [2, 7]");
  const int p = from_precision;
  const std::uint32_t mask = (1u << p) - 1u;
  std::uint64_t out = 0;
  for (int k = 0; k < 3; ++k) {
    const std::uint32_t lane = key.lane(k);
    const std::uint32_t sign = lane >> (2 * p);
    const std::uint32_t exp = (lane >> p) & mask;
    const std::uint32_t man = lane & mask;
    const int q = p - 1;
    const std::uint32_t coarse = (sign << (2 * q)) | ((exp >> 1) << q) | (man >> 1);
    out |= static_cast<std::uint64_t>(coarse) << (PredictorKey::kLaneBits * k);
  }
  return PredictorKey{out};
}

/// 12 lowercase hex digits.
inline std::string to_hex(PredictorKey key) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%012llx", static_cast<unsigned long long>(key.value & PredictorKey::kKeyMask));
  return buf;
}

}  // namespace hrpp
