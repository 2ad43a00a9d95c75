#include "cdrp/kernels.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "cdrp/errors.hpp"

namespace cdrp {

namespace {

constexpr double kSqrtPi = 1.7724538509055160273;

// g_k = Gamma((k + 1) / 2) via g_{k+2} = (k + 1) / 2 * g_k.
double half_gamma(int k) {
  double g = (k % 2 == 0) ? kSqrtPi : 1.0;
  for (int j = k % 2; j < k; j += 2) g *= 0.5 * (j + 1);
  return g;
}

double lanczos_gamma(double x) {
  static constexpr std::array<double, 9> c = {
      0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
      771.32342877765313,   -176.61502916214059,   12.507343278686905,
      -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
  if (x < 0.5) return std::numbers::pi / (std::sin(std::numbers::pi * x) * lanczos_gamma(1.0 - x));
  x -= 1.0;
  double a = c[0];
  const double t = x + 7.5;
  for (int i = 1; i < 9; ++i) a += c[i] / (x + i);
  return std::sqrt(2.0 * std::numbers::pi) * std::pow(t, x + 0.5) * std::exp(-t) * a;
}

}  // namespace

double heat_kernel(double tau, double delta) {
  if (!(tau > 0.0)) throw DomainError("heat kernel needs tau > 0");
  return std::exp(-delta * delta / (2.0 * tau)) / std::sqrt(2.0 * std::numbers::pi * tau);
}

double heat_kernel_density(double s, double y, double t, double x) {
  if (!(t > s)) throw DomainError("heat kernel needs t > s");
  return heat_kernel(t - s, x - y);
}

double gamma_fn(double x) {
  const double twice = 2.0 * x;
  if (x > 0.0 && twice == std::floor(twice) && twice < 340.0) return half_gamma(static_cast<int>(twice) - 1);
  return lanczos_gamma(x);
}

double rho_k_l2_norm_sq(int k, double tau, double delta) {
  if (k < 0) throw DomainError("chaos order must be nonnegative");
  if (!(tau > 0.0)) throw DomainError("rho_k norm needs tau > 0");
  return std::pow(tau, 0.5 * k - 1.0) * std::exp(-delta * delta / tau) /
         (std::ldexp(kSqrtPi, k + 1) * half_gamma(k));
}

SeriesSum second_moment_series(double beta, double tau, double delta, double tol) {
  if (!(tol > 0.0)) throw DomainError("series tolerance must be positive");
  SeriesSum out;
  double term = rho_k_l2_norm_sq(0, tau, delta);
  out.value = term;
  if (beta == 0.0) return out;
  // term_{k+1} / term_k = beta^2 sqrt(tau) / 2 * g_k / g_{k+1}; the ratio decreases in k,
  // so once it is <= 1/2 the remaining tail is at most twice the next term.
  // g_k / g_{k+1} comes from log gamma: g_k itself overflows near k = 340.
  const double b2 = beta * beta * std::sqrt(tau) / 2.0;
  for (int k = 0;; ++k) {
    const double ratio = b2 * std::exp(std::lgamma(0.5 * (k + 1)) - std::lgamma(0.5 * (k + 2)));
    const double next = term * ratio;
    if (!std::isfinite(next)) throw DomainError("second moment series overflows");
    if (ratio <= 0.5 && 2.0 * next < tol) {
      out.k_max = k;
      out.tail_bound = 2.0 * next;
      return out;
    }
    out.value += next;
    term = next;
  }
}

double moment_ratio_bound(double beta, double tau_max) {
  if (!(tau_max > 0.0)) throw DomainError("tau_max must be positive");
  double sum = 1.0;
  if (beta == 0.0) return sum;
  const double a = beta * beta * std::sqrt(tau_max) / 2.0;
  double power = 1.0;
  for (int k = 1; k < 400; ++k) {
    power *= a;
    const double term = power * kSqrtPi / half_gamma(k);
    sum += term;
    if (term < 1e-17 * sum && k > 2 * a * a) break;
  }
  return sum;
}

}  // namespace cdrp
