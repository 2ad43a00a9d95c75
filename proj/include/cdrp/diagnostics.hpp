#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include "cdrp/cdrp_measure.hpp"
#include "cdrp/env_noise.hpp"

namespace cdrp {

struct Estimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  double variance = 0.0;  // sample variance (n - 1 denominator)
  std::size_t count = 0;
};

/// Mean, sample variance and standard error, accumulated in index order.
Estimate summarize(const std::vector<double>& xs);

/// sum_{k <= floor(2^n up_to / T)} (X(t_k) - X(t_{k-1}))^2.
double quadratic_variation(const DyadicPath& path, double up_to);

/// Trapezoid approximation of int int |X_t - X_s|^{2 gamma} / |t - s|^gamma ds dt on the
/// path mesh (the diagonal contributes zero).
double grr_functional(const DyadicPath& path, double gamma);

struct HolderEstimate {
  double exponent = 0.0;
  double log_log_coefficient = 0.0;
  double intercept = 0.0;
  std::vector<double> mean_log_sup;  // scale j = 1..level
};

/// Fits mean log S_j = a + delta log h_j + c log log(1/h_j) over j = 1..level, where
/// S_j = max_k |X(k h_j) - X((k-1) h_j)| and h_j = 2^-j. Returns delta; the log log term
/// absorbs Levy's modulus so Brownian paths give about 1/2.
HolderEstimate holder_exponent_estimate(const std::vector<DyadicPath>& paths);

/// log M_n = sum_k log z(C_k) / rho(C_k) over the 2^n slabs C_k = (t_{k-1}, X(t_{k-1}); t_k, X(t_k)).
/// Both factors come from the same transfer-matrix code, the second one with unit weights.
double log_martingale_mn(std::shared_ptr<const Environment> env, const DyadicPath& path, int n, double beta);

double martingale_mn(std::shared_ptr<const Environment> env, const DyadicPath& path, int n, double beta);

/// log M_n for n = 0..max_level together with every slab factor z(C_k)/rho(C_k).
struct MartingaleTrace {
  std::vector<double> log_m;
  std::vector<std::vector<double>> factors;
};

MartingaleTrace martingale_trace(std::shared_ptr<const Environment> env, const DyadicPath& path, int max_level,
                                 double beta);

enum class FddFunctional { const_one, endpoint_square, halftime_sign };

FddFunctional parse_functional(std::string_view tag);
std::string_view to_string(FddFunctional f);

struct AveragedFddSetup {
  LatticeSpec spec = LatticeSpec::continuum(256);
  Disorder dist = Disorder::gaussian;
  std::uint64_t seed = 1;
  int level = 1;
};

/// One replica of the joint experiment: z(0,0; T,*) with X(T/2) and X(T) of a path drawn
/// from the same environment.
struct FddSample {
  double z = 0.0;
  double halftime = 0.0;
  double endpoint = 0.0;
};

std::vector<FddSample> averaged_fdd_samples(double beta, std::size_t replicas, const AveragedFddSetup& setup);

/// z * Y for the chosen functional. X(T/2) = 0 counts as one half.
double weighted_functional(FddFunctional f, const FddSample& s);

/// Joint Monte Carlo of E_Q[z(0,0; T,*) E_P[Y]] with a fresh environment and one path per
/// replica. The Wiener values are 1, T and 1/2.
Estimate averaged_fdd_check(FddFunctional functional, double beta, std::size_t replicas,
                            const AveragedFddSetup& setup);

}  // namespace cdrp
