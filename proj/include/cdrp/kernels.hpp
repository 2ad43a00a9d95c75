#pragma once

namespace cdrp {

/// Gaussian density exp(-delta^2 / (2 tau)) / sqrt(2 pi tau).
double heat_kernel(double tau, double delta);

/// rho(s, y; t, x) = heat_kernel(t - s, x - y). Throws DomainError unless t > s.
double heat_kernel_density(double s, double y, double t, double x);

/// Gamma function: exact product at half-integers, Lanczos (g = 7) elsewhere.
double gamma_fn(double x);

/// L2 norm squared of the k-th chaos kernel:
/// tau^{k/2 - 1} exp(-delta^2 / tau) / (2^{k+1} sqrt(pi) Gamma((k + 1) / 2)).
double rho_k_l2_norm_sq(int k, double tau, double delta);

struct SeriesSum {
  double value = 0.0;
  double tail_bound = 0.0;
  int k_max = 0;  // last term included
};

/// sum_k beta^{2k} rho_k_l2_norm_sq(k, tau, delta), truncated once the remaining
/// tail is provably below tol.
SeriesSum second_moment_series(double beta, double tau, double delta, double tol = 1e-14);

/// sup over 0 < tau <= tau_max of the second moment divided by rho^2.
double moment_ratio_bound(double beta, double tau_max);

}  // namespace cdrp
