#include "cdrp/simd/dispatch.hpp"
#include "math_common.hpp"

namespace cdrp::simd {

namespace {

void philox_bits_scalar(PhiloxKey key, std::uint32_t stream, std::uint64_t first, std::uint64_t stride,
                        std::size_t n, std::uint64_t* out) {
  for (std::size_t k = 0; k < n; ++k) out[k] = cdrp::philox_bits(first + k * stride, stream, key);
}

void normal_from_bits_scalar(const std::uint64_t* bits, std::size_t n, double* out) {
  for (std::size_t k = 0; k < n; ++k) out[k] = detail::ppnd_scalar(bits_to_open_uniform(bits[k]));
}

void exp_affine_scalar(const double* x, std::size_t n, double beta, double shift, double* out) {
  for (std::size_t k = 0; k < n; ++k) out[k] = detail::exp_scalar(beta * x[k] - shift);
}

void half_weighted_sum_scalar(const double* a, const double* b, const double* w, std::size_t n,
                              double* out) {
  for (std::size_t k = 0; k < n; ++k) out[k] = (0.5 * w[k]) * (a[k] + b[k]);
}

void product_scalar(const double* a, const double* b, std::size_t n, double* out) {
  for (std::size_t k = 0; k < n; ++k) out[k] = a[k] * b[k];
}

void convolve_symmetric_scalar(const double* in, std::size_t n, const double* taps, std::size_t half,
                               double* out) {
  const std::size_t width = 2 * half + 1;
  for (std::size_t j = 0; j < n; ++j) {
    double acc = 0.0;
    for (std::size_t m = 0; m < width; ++m) {
      const std::size_t d = m < half ? half - m : m - half;
      acc += taps[d] * in[j + m];
    }
    out[j] = acc;
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar",          philox_bits_scalar, normal_from_bits_scalar,
                                 exp_affine_scalar, half_weighted_sum_scalar, product_scalar,
                                 convolve_symmetric_scalar};
  return table;
}

}  // namespace cdrp::simd
