#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "cdrp/philox.hpp"

namespace cdrp::simd {

// Data-parallel inner loops. Every variant in a table must produce bit-identical
// output to the scalar reference; tests/test_simd.cpp enforces this.
struct KernelTable {
  const char* name;

  // out[k] = philox_bits(first + k * stride, stream, key)
  void (*philox_bits)(PhiloxKey key, std::uint32_t stream, std::uint64_t first, std::uint64_t stride,
                      std::size_t n, std::uint64_t* out);

  // out[k] = inverse standard normal CDF of bits_to_open_uniform(bits[k])
  void (*normal_from_bits)(const std::uint64_t* bits, std::size_t n, double* out);

  // out[k] = exp(beta * x[k] - shift)
  void (*exp_affine)(const double* x, std::size_t n, double beta, double shift, double* out);

  // out[k] = (0.5 * w[k]) * (a[k] + b[k])
  void (*half_weighted_sum)(const double* a, const double* b, const double* w, std::size_t n,
                            double* out);

  // out[k] = a[k] * b[k]
  void (*product)(const double* a, const double* b, std::size_t n, double* out);

  // out[j] = sum_{d=-half}^{half} taps[|d|] * in[j + half + d], summed in increasing d.
  // `in` holds n + 2 * half values.
  void (*convolve_symmetric)(const double* in, std::size_t n, const double* taps, std::size_t half,
                             double* out);
};

const KernelTable& scalar_kernels();

/// AVX2 table, or nullptr when not compiled in or not supported by this CPU.
const KernelTable* avx2_kernels();

/// Table used by the library. Chosen once: AVX2 when available, unless the
/// CDRP_SIMD environment variable says "scalar".
const KernelTable& active_kernels();

/// Override the active table ("scalar", "avx2" or "auto"). Returns false if unavailable.
bool select_kernels(std::string_view name);

}  // namespace cdrp::simd
