// AVX2 variants. Operation order mirrors kernels_scalar.cpp exactly (no FMA), so
// outputs are bit-identical to the scalar table.

#include <immintrin.h>

#include "cdrp/simd/dispatch.hpp"
#include "math_common.hpp"

namespace cdrp::simd {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

// 32x32 -> 64 multiply of all eight lanes, split into hi and lo words.
inline void mulhilo8(__m256i a, __m256i m, __m256i& hi, __m256i& lo) {
  const __m256i even = _mm256_mul_epu32(a, m);
  const __m256i odd = _mm256_mul_epu32(_mm256_srli_epi64(a, 32), m);
  lo = _mm256_blend_epi32(even, _mm256_slli_epi64(odd, 32), 0xAA);
  hi = _mm256_blend_epi32(_mm256_srli_epi64(even, 32), odd, 0xAA);
}

void philox_bits_avx2(PhiloxKey key, std::uint32_t stream, std::uint64_t first, std::uint64_t stride,
                      std::size_t n, std::uint64_t* out) {
  const __m256i m0 = _mm256_set1_epi32(static_cast<int>(kMul0));
  const __m256i m1 = _mm256_set1_epi32(static_cast<int>(kMul1));
  std::size_t k = 0;
  alignas(32) std::uint32_t lo_words[8], hi_words[8], r0[8], r1[8];
  for (; k + 8 <= n; k += 8) {
    for (int l = 0; l < 8; ++l) {
      const std::uint64_t c = first + (k + l) * stride;
      lo_words[l] = static_cast<std::uint32_t>(c);
      hi_words[l] = static_cast<std::uint32_t>(c >> 32);
    }
    __m256i c0 = _mm256_load_si256(reinterpret_cast<const __m256i*>(lo_words));
    __m256i c1 = _mm256_load_si256(reinterpret_cast<const __m256i*>(hi_words));
    __m256i c2 = _mm256_set1_epi32(static_cast<int>(stream));
    __m256i c3 = _mm256_setzero_si256();
    std::uint32_t k0 = key.k0, k1 = key.k1;
    for (int round = 0; round < 10; ++round) {
      __m256i hi0, lo0, hi1, lo1;
      mulhilo8(c0, m0, hi0, lo0);
      mulhilo8(c2, m1, hi1, lo1);
      const __m256i n0 = _mm256_xor_si256(_mm256_xor_si256(hi1, c1), _mm256_set1_epi32(static_cast<int>(k0)));
      const __m256i n2 = _mm256_xor_si256(_mm256_xor_si256(hi0, c3), _mm256_set1_epi32(static_cast<int>(k1)));
      c0 = n0;
      c1 = lo1;
      c2 = n2;
      c3 = lo0;
      k0 += kWeyl0;
      k1 += kWeyl1;
    }
    _mm256_store_si256(reinterpret_cast<__m256i*>(r0), c0);
    _mm256_store_si256(reinterpret_cast<__m256i*>(r1), c1);
    for (int l = 0; l < 8; ++l) out[k + l] = (static_cast<std::uint64_t>(r1[l]) << 32) | r0[l];
  }
  for (; k < n; ++k) out[k] = cdrp::philox_bits(first + k * stride, stream, key);
}

inline __m256d horner8_avx(const double* c, __m256d x) {
  __m256d p = _mm256_set1_pd(c[0]);
  for (int k = 1; k < 8; ++k) p = _mm256_add_pd(_mm256_mul_pd(p, x), _mm256_set1_pd(c[k]));
  return p;
}

void normal_from_bits_avx2(const std::uint64_t* bits, std::size_t n, double* out) {
  using namespace detail;
  std::size_t k = 0;
  alignas(32) double u[4];
  alignas(32) double q[4];
  for (; k + 4 <= n; k += 4) {
    for (int l = 0; l < 4; ++l) u[l] = bits_to_open_uniform(bits[k + l]);
    const __m256d vq = _mm256_sub_pd(_mm256_load_pd(u), _mm256_set1_pd(0.5));
    const __m256d r = _mm256_sub_pd(_mm256_set1_pd(0.180625), _mm256_mul_pd(vq, vq));
    const __m256d v = _mm256_div_pd(_mm256_mul_pd(vq, horner8_avx(kA, r)), horner8_avx(kB, r));
    _mm256_storeu_pd(out + k, v);
    _mm256_store_pd(q, vq);
    for (int l = 0; l < 4; ++l)
      if (!ppnd_is_central(q[l])) out[k + l] = ppnd_tail(u[l], q[l]);
  }
  for (; k < n; ++k) out[k] = ppnd_scalar(bits_to_open_uniform(bits[k]));
}

void exp_affine_avx2(const double* x, std::size_t n, double beta, double shift, double* out) {
  using namespace detail;
  const __m256d vb = _mm256_set1_pd(beta);
  const __m256d vs = _mm256_set1_pd(shift);
  const __m256d lo = _mm256_set1_pd(kExpMin);
  const __m256d hi = _mm256_set1_pd(kExpMax);
  const __m256d magic = _mm256_set1_pd(1023.0 + 4503599627370496.0);  // 2^52 + bias
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    __m256d v = _mm256_sub_pd(_mm256_mul_pd(vb, _mm256_loadu_pd(x + k)), vs);
    v = _mm256_min_pd(_mm256_max_pd(v, lo), hi);
    const __m256d nn =
        _mm256_round_pd(_mm256_mul_pd(v, _mm256_set1_pd(kLog2e)), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_sub_pd(v, _mm256_mul_pd(nn, _mm256_set1_pd(kLn2Hi)));
    r = _mm256_sub_pd(r, _mm256_mul_pd(nn, _mm256_set1_pd(kLn2Lo)));
    __m256d p = _mm256_set1_pd(kExpPoly[0]);
    for (int j = 1; j < 14; ++j) p = _mm256_add_pd(_mm256_mul_pd(p, r), _mm256_set1_pd(kExpPoly[j]));
    // Low mantissa bits of (nn + magic) hold nn + 1023; shifting by 52 moves them into the exponent.
    const __m256i e = _mm256_slli_epi64(_mm256_castpd_si256(_mm256_add_pd(nn, magic)), 52);
    _mm256_storeu_pd(out + k, _mm256_mul_pd(p, _mm256_castsi256_pd(e)));
  }
  for (; k < n; ++k) out[k] = exp_scalar(beta * x[k] - shift);
}

void half_weighted_sum_avx2(const double* a, const double* b, const double* w, std::size_t n, double* out) {
  const __m256d half = _mm256_set1_pd(0.5);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d hw = _mm256_mul_pd(half, _mm256_loadu_pd(w + k));
    const __m256d s = _mm256_add_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k));
    _mm256_storeu_pd(out + k, _mm256_mul_pd(hw, s));
  }
  for (; k < n; ++k) out[k] = (0.5 * w[k]) * (a[k] + b[k]);
}

void product_avx2(const double* a, const double* b, std::size_t n, double* out) {
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4)
    _mm256_storeu_pd(out + k, _mm256_mul_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k)));
  for (; k < n; ++k) out[k] = a[k] * b[k];
}

void convolve_symmetric_avx2(const double* in, std::size_t n, const double* taps, std::size_t half,
                             double* out) {
  const std::size_t width = 2 * half + 1;
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t m = 0; m < width; ++m) {
      const std::size_t d = m < half ? half - m : m - half;
      acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_set1_pd(taps[d]), _mm256_loadu_pd(in + j + m)));
    }
    _mm256_storeu_pd(out + j, acc);
  }
  for (; j < n; ++j) {
    double acc = 0.0;
    for (std::size_t m = 0; m < width; ++m) {
      const std::size_t d = m < half ? half - m : m - half;
      acc += taps[d] * in[j + m];
    }
    out[j] = acc;
  }
}

}  // namespace

const KernelTable* avx2_kernels_compiled() {
  static const KernelTable table{"avx2",          philox_bits_avx2, normal_from_bits_avx2,
                                 exp_affine_avx2, half_weighted_sum_avx2, product_avx2,
                                 convolve_symmetric_avx2};
  return &table;
}

}  // namespace cdrp::simd
