#include "cdrp/diagnostics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "cdrp/errors.hpp"
#include "cdrp/parallel.hpp"

namespace cdrp {

Estimate summarize(const std::vector<double>& xs) {
  Estimate e;
  e.count = xs.size();
  if (xs.empty()) return e;
  double sum = 0.0;
  for (double x : xs) sum += x;
  e.mean = sum / static_cast<double>(xs.size());
  if (xs.size() < 2) return e;
  double ss = 0.0;
  for (double x : xs) ss += (x - e.mean) * (x - e.mean);
  e.variance = ss / static_cast<double>(xs.size() - 1);
  e.stderr_ = std::sqrt(e.variance / static_cast<double>(xs.size()));
  return e;
}

double quadratic_variation(const DyadicPath& path, double up_to) {
  if (up_to < 0.0 || up_to > path.horizon * (1.0 + 1e-12)) throw DomainError("QV horizon outside the path");
  const std::size_t N = path.positions.size() - 1;
  const auto last = std::min<std::size_t>(N, static_cast<std::size_t>(std::floor(up_to / path.horizon * N + 1e-9)));
  double qv = 0.0;
  for (std::size_t k = 1; k <= last; ++k) {
    const double d = path.positions[k] - path.positions[k - 1];
    qv += d * d;
  }
  return qv;
}

double grr_functional(const DyadicPath& path, double gamma) {
  if (!(gamma > 0.0)) throw DomainError("gamma must be positive");
  const std::size_t N = path.positions.size() - 1;
  if (N == 0) return 0.0;
  const double h = path.horizon / static_cast<double>(N);
  auto weight = [&](std::size_t k) { return (k == 0 || k == N) ? 0.5 * h : h; };
  double total = 0.0;
  for (std::size_t j = 0; j <= N; ++j) {
    double row = 0.0;
    for (std::size_t k = 0; k < j; ++k) {
      const double dx = std::fabs(path.positions[j] - path.positions[k]);
      if (dx == 0.0) continue;
      const double dt = path.times[j] - path.times[k];
      row += weight(k) * std::pow(dx, 2.0 * gamma) / std::pow(dt, gamma);
    }
    total += 2.0 * weight(j) * row;  // the integrand is symmetric in (s, t)
  }
  return total;
}

namespace {

// Solves the 3x3 system a x = b by Gaussian elimination with partial pivoting.
std::array<double, 3> solve3(std::array<std::array<double, 3>, 3> a, std::array<double, 3> b) {
  for (int c = 0; c < 3; ++c) {
    int p = c;
    for (int r = c + 1; r < 3; ++r)
      if (std::fabs(a[r][c]) > std::fabs(a[p][c])) p = r;
    std::swap(a[c], a[p]);
    std::swap(b[c], b[p]);
    if (a[c][c] == 0.0) throw DiagnosticError("degenerate regression design");
    for (int r = c + 1; r < 3; ++r) {
      const double f = a[r][c] / a[c][c];
      for (int k = c; k < 3; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::array<double, 3> x{};
  for (int r = 2; r >= 0; --r) {
    double s = b[r];
    for (int k = r + 1; k < 3; ++k) s -= a[r][k] * x[k];
    x[r] = s / a[r][r];
  }
  return x;
}

}  // namespace

HolderEstimate holder_exponent_estimate(const std::vector<DyadicPath>& paths) {
  if (paths.size() < 100) throw DiagnosticError("Hoelder estimate needs at least 100 paths");
  const int level = paths.front().level;
  if (level < 8) throw DiagnosticError("Hoelder estimate needs paths at level 8 or finer");
  for (const auto& p : paths)
    if (p.level != level) throw DiagnosticError("all paths must share one level");

  HolderEstimate est;
  est.mean_log_sup.assign(static_cast<std::size_t>(level), 0.0);
  for (const auto& p : paths) {
    for (int j = 1; j <= level; ++j) {
      const std::size_t stride = std::size_t{1} << (level - j);
      double sup = 0.0;
      for (std::size_t k = stride; k < p.positions.size(); k += stride)
        sup = std::max(sup, std::fabs(p.positions[k] - p.positions[k - stride]));
      if (!(sup > 0.0)) throw DiagnosticError("path is constant at some scale");
      est.mean_log_sup[static_cast<std::size_t>(j - 1)] += std::log(sup);
    }
  }
  std::array<std::array<double, 3>, 3> ata{};
  std::array<double, 3> atb{};
  for (int j = 1; j <= level; ++j) {
    double& y = est.mean_log_sup[static_cast<std::size_t>(j - 1)];
    y /= static_cast<double>(paths.size());
    const double log_h = -j * std::log(2.0);
    const std::array<double, 3> row{1.0, log_h, std::log(-log_h)};
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) ata[a][b] += row[a] * row[b];
      atb[a] += row[a] * y;
    }
  }
  const auto x = solve3(ata, atb);
  est.intercept = x[0];
  est.exponent = x[1];
  est.log_log_coefficient = x[2];
  return est;
}

namespace {

double slab_log_ratio(const WeightField& w, const WeightField& unit, std::uint32_t t0, std::int64_t x0,
                      std::uint32_t t1, std::int64_t x1) {
  const RecursionOptions ro{Accumulation::automatic, t1 - t0};
  const double lz = forward_partition(w, t0, x0, t1, ro).rows.log_value(t1, x1);
  const double l0 = forward_partition(unit, t0, x0, t1, ro).rows.log_value(t1, x1);
  if (!std::isfinite(lz) || !std::isfinite(l0)) throw DomainError("slab end point is unreachable");
  return lz - l0;
}

void check_level(const DyadicPath& path, const LatticeSpec& spec, int n) {
  if (n < 0 || n > path.level) throw DomainError("martingale level exceeds the path level");
  if ((std::uint32_t{1} << n) > spec.n_time || spec.n_time % (std::uint32_t{1} << n) != 0)
    throw DomainError("grid too coarse for the martingale level");
  if (path.sites.size() != (std::size_t{1} << path.level) + 1) throw DomainError("path has no lattice sites");
}

}  // namespace

MartingaleTrace martingale_trace(std::shared_ptr<const Environment> env, const DyadicPath& path, int max_level,
                                 double beta) {
  if (!env) throw ConfigError("martingale needs an environment");
  const LatticeSpec& spec = env->spec();
  check_level(path, spec, max_level);
  const WeightField w(env, lattice_coupling(beta, spec));
  const WeightField unit(env, 0.0);
  MartingaleTrace trace;
  for (int n = 0; n <= max_level; ++n) {
    const std::uint32_t slabs = std::uint32_t{1} << n;
    const std::uint32_t m = spec.n_time / slabs;
    const std::size_t stride = std::size_t{1} << (path.level - n);
    std::vector<double> factors(slabs);
    double log_m = 0.0;
    for (std::uint32_t k = 1; k <= slabs; ++k) {
      const double lr =
          slab_log_ratio(w, unit, (k - 1) * m, path.sites[(k - 1) * stride], k * m, path.sites[k * stride]);
      factors[k - 1] = std::exp(lr);
      log_m += lr;
    }
    trace.log_m.push_back(log_m);
    trace.factors.push_back(std::move(factors));
  }
  return trace;
}

double log_martingale_mn(std::shared_ptr<const Environment> env, const DyadicPath& path, int n, double beta) {
  if (!env) throw ConfigError("martingale needs an environment");
  check_level(path, env->spec(), n);
  const LatticeSpec& spec = env->spec();
  const WeightField w(env, lattice_coupling(beta, spec));
  const WeightField unit(env, 0.0);
  const std::uint32_t slabs = std::uint32_t{1} << n;
  const std::uint32_t m = spec.n_time / slabs;
  const std::size_t stride = std::size_t{1} << (path.level - n);
  double log_m = 0.0;
  for (std::uint32_t k = 1; k <= slabs; ++k)
    log_m += slab_log_ratio(w, unit, (k - 1) * m, path.sites[(k - 1) * stride], k * m, path.sites[k * stride]);
  return log_m;
}

double martingale_mn(std::shared_ptr<const Environment> env, const DyadicPath& path, int n, double beta) {
  return std::exp(log_martingale_mn(std::move(env), path, n, beta));
}

FddFunctional parse_functional(std::string_view tag) {
  if (tag == "const_one") return FddFunctional::const_one;
  if (tag == "endpoint_square") return FddFunctional::endpoint_square;
  if (tag == "halftime_sign") return FddFunctional::halftime_sign;
  throw ConfigError("unknown functional '" + std::string(tag) + "'");
}

std::string_view to_string(FddFunctional f) {
  switch (f) {
    case FddFunctional::const_one: return "const_one";
    case FddFunctional::endpoint_square: return "endpoint_square";
    default: return "halftime_sign";
  }
}

std::vector<FddSample> averaged_fdd_samples(double beta, std::size_t replicas, const AveragedFddSetup& setup) {
  if (setup.level < 1) throw DomainError("the joint experiment needs level >= 1");
  const std::uint32_t N = std::uint32_t{1} << setup.level;
  MeasureOptions mo;
  mo.keep_every = setup.spec.n_time / N;
  mo.build_backward = false;
  GenerateOptions go;
  go.memory_budget_bytes = 0;  // the measure caches the only cells it reads
  return parallel_map<FddSample>(replicas, [&](std::size_t r) {
    auto env = std::make_shared<const Environment>(
        Environment::generate(setup.spec, {setup.seed, r, StreamPurpose::environment}, setup.dist, go));
    const PolymerMeasure m(env, beta, mo);
    const DyadicPath p = sample_cdrp_path(m, setup.level, {setup.seed, r, StreamPurpose::path_sampling});
    return FddSample{std::exp(m.log_normalizer()), p.positions[N / 2], p.positions.back()};
  });
}

double weighted_functional(FddFunctional f, const FddSample& s) {
  switch (f) {
    case FddFunctional::const_one: return s.z;
    case FddFunctional::endpoint_square: return s.z * s.endpoint * s.endpoint;
    default: return s.z * (s.halftime > 0.0 ? 1.0 : (s.halftime == 0.0 ? 0.5 : 0.0));
  }
}

Estimate averaged_fdd_check(FddFunctional functional, double beta, std::size_t replicas,
                            const AveragedFddSetup& setup) {
  const auto samples = averaged_fdd_samples(beta, replicas, setup);
  std::vector<double> values(samples.size());
  for (std::size_t r = 0; r < samples.size(); ++r) values[r] = weighted_functional(functional, samples[r]);
  return summarize(values);
}

}  // namespace cdrp
