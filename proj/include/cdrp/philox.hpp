#pragma once

#include <array>
#include <cstdint>

namespace cdrp {

struct PhiloxKey {
  std::uint32_t k0 = 0;
  std::uint32_t k1 = 0;
};

using PhiloxCounter = std::array<std::uint32_t, 4>;

/// Philox4x32 with 10 rounds (Salmon et al., SC'11). Pure function of (counter, key).
PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key);

/// First 64 output bits for a 64-bit counter and a 32-bit stream word.
inline std::uint64_t philox_bits(std::uint64_t counter, std::uint32_t stream, PhiloxKey key) {
  const PhiloxCounter out = philox4x32_10(
      {static_cast<std::uint32_t>(counter), static_cast<std::uint32_t>(counter >> 32), stream, 0u}, key);
  return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

/// Uniform in the open interval (0, 1) from the top 52 bits: (k + 1/2) 2^-52 is exact,
/// so the extremes are 2^-53 and 1 - 2^-53. With 53 bits the top value rounds to 1.
inline double bits_to_open_uniform(std::uint64_t bits) {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace cdrp
