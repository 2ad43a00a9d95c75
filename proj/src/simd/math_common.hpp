#pragma once

// Scalar building blocks shared by the scalar and AVX2 kernels. Everything here has
// internal linkage so the copy compiled with -mavx2 never leaks into scalar callers.

#include <cmath>
#include <cstdint>
#include <cstring>

namespace cdrp::simd::detail {
namespace {

constexpr double kLog2e = 1.4426950408889634074;
constexpr double kLn2Hi = 6.93147180369123816490e-01;
constexpr double kLn2Lo = 1.90821492927058770002e-10;
constexpr double kExpMin = -708.0;
constexpr double kExpMax = 709.0;

// 1/k! for k = 13 down to 0 (Horner order).
constexpr double kExpPoly[14] = {
    1.0 / 6227020800.0, 1.0 / 479001600.0, 1.0 / 39916800.0, 1.0 / 3628800.0, 1.0 / 362880.0,
    1.0 / 40320.0,      1.0 / 5040.0,      1.0 / 720.0,      1.0 / 120.0,     1.0 / 24.0,
    1.0 / 6.0,          0.5,               1.0,              1.0};

inline double exp_scalar(double x) {
  x = x < kExpMin ? kExpMin : (x > kExpMax ? kExpMax : x);
  const double n = std::nearbyint(x * kLog2e);
  double r = x - n * kLn2Hi;
  r = r - n * kLn2Lo;
  double p = kExpPoly[0];
  for (int k = 1; k < 14; ++k) p = p * r + kExpPoly[k];
  const std::uint64_t bits = static_cast<std::uint64_t>(static_cast<std::int64_t>(n) + 1023) << 52;
  double scale;
  std::memcpy(&scale, &bits, sizeof scale);
  return p * scale;
}

// Wichura, Algorithm AS 241 (PPND16). Central region |q| <= 0.425.
constexpr double kA[8] = {2509.0809287301226727,  33430.575583588128105, 67265.770927008700853,
                          45921.953931549871457,  13731.693765509461125, 1971.5909503065514427,
                          133.14166789178437745,  3.387132872796366608};
constexpr double kB[8] = {5226.495278852545925,  28729.085735721942674, 39307.89580009271061,
                          21213.794301586595867, 5394.1960214247511077, 687.1870074920579083,
                          42.313330701600911252, 1.0};
constexpr double kC[8] = {7.7454501427834140764e-4, 0.0227238449892691845833, 0.24178072517745061177,
                          1.27045825245236838258,   3.64784832476320460504,   5.7694972214606914055,
                          4.6303378461565452959,    1.42343711074968357734};
constexpr double kD[8] = {1.05075007164441684324e-9, 5.475938084995344946e-4, 0.0151986665636164571966,
                          0.14810397642748007459,    0.68976733498510000455,  1.6763848301838038494,
                          2.05319162663775882187,    1.0};
constexpr double kE[8] = {2.01033439929228813265e-7, 2.71155556874348757815e-5, 0.0012426609473880784386,
                          0.026532189526576123093,   0.29656057182850489123,    1.7848265399172913358,
                          5.4637849111641143699,     6.6579046435011037772};
constexpr double kF[8] = {2.04426310338993978564e-15, 1.4215117583164458887e-7, 1.8463183175100546818e-5,
                          7.868691311456132591e-4,    0.0148753612908506148525, 0.13692988092273580531,
                          0.59983220655588793769,     1.0};

inline double horner8(const double* c, double x) {
  double p = c[0];
  for (int k = 1; k < 8; ++k) p = p * x + c[k];
  return p;
}

inline bool ppnd_is_central(double q) { return q >= -0.425 && q <= 0.425; }

inline double ppnd_central(double q) {
  const double r = 0.180625 - q * q;
  return q * horner8(kA, r) / horner8(kB, r);
}

inline double ppnd_tail(double p, double q) {
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    value = horner8(kC, r) / horner8(kD, r);
  } else {
    r -= 5.0;
    value = horner8(kE, r) / horner8(kF, r);
  }
  return q < 0.0 ? -value : value;
}

inline double ppnd_scalar(double p) {
  const double q = p - 0.5;
  return ppnd_is_central(q) ? ppnd_central(q) : ppnd_tail(p, q);
}

}  // namespace
}  // namespace cdrp::simd::detail
