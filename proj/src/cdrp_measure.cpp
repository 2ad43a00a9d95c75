#include "cdrp/cdrp_measure.hpp"

#include <cmath>
#include <limits>

#include "cdrp/errors.hpp"

namespace cdrp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Corner {
  std::int64_t lo = 0;
  double frac = 0.0;  // weight of lo + 2
};

// Neighbouring lattice sites of parity t around position x.
Corner parity_corner(const LatticeSpec& spec, std::uint32_t t, double x) {
  const double u = x / spec.dx();
  auto lo = static_cast<std::int64_t>(std::floor(u));
  if (((lo - static_cast<std::int64_t>(t)) & 1) != 0) lo -= 1;
  Corner c{lo, (u - static_cast<double>(lo)) / 2.0};
  if (c.frac < 1e-12) c.frac = 0.0;
  if (c.frac > 1.0 - 1e-12) {
    c.lo += 2;
    c.frac = 0.0;
  }
  return c;
}

// Multilinear interpolation of a log-valued function over the parity corners.
template <class F>
double interpolate_log(const std::vector<Corner>& corners, F&& log_f) {
  const std::size_t k = corners.size();
  std::vector<std::int64_t> sites(k);
  double acc = 0.0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << k); ++mask) {
    double weight = 1.0;
    for (std::size_t j = 0; j < k; ++j) {
      const bool hi = (mask >> j) & 1;
      weight *= hi ? corners[j].frac : 1.0 - corners[j].frac;
      sites[j] = corners[j].lo + (hi ? 2 : 0);
    }
    if (weight == 0.0) continue;
    const double v = log_f(sites);
    if (!std::isfinite(v)) return kNegInf;
    acc += weight * v;
  }
  return acc;
}

// Picks the site with cumulative weight crossing u * total over the overlap of two rows.
std::int64_t inverse_cdf(const ParityRow& a, const ParityRow& b, double u) {
  const std::int64_t lo = std::max(a.first, b.first);
  const std::int64_t hi = std::min(a.last(), b.last());
  thread_local std::vector<double> cum;
  cum.clear();
  double total = 0.0;
  for (std::int64_t s = lo; s <= hi; s += 2) {
    total += a.mantissa(s) * b.mantissa(s);
    cum.push_back(total);
  }
  if (!(total > 0.0)) throw DomainError("sampling step has no admissible site");
  const double target = u * total;
  std::size_t k = 0;
  while (k + 1 < cum.size() && cum[k] < target) ++k;
  return lo + 2 * static_cast<std::int64_t>(k);
}

// Relative binomial weights C(m, j), j = 0..m, for the unit-weight slab kernel.
std::vector<double> binomial_row(std::uint32_t m) {
  std::vector<double> out(m + 1);
  const double mid = std::lgamma(m + 1.0) - 2.0 * std::lgamma(0.5 * m + 1.0);
  for (std::uint32_t j = 0; j <= m; ++j)
    out[j] = std::exp(std::lgamma(m + 1.0) - std::lgamma(j + 1.0) - std::lgamma(m - j + 1.0) - mid);
  return out;
}

DyadicPath sample_impl(const PolymerMeasure& m, int level, SeedSpec seed, bool pinned) {
  const LatticeSpec& spec = m.spec();
  const std::uint32_t n = spec.n_time;
  if (level < 0 || level > 30 || (std::uint32_t{1} << level) > n || n % (std::uint32_t{1} << level) != 0)
    throw DomainError("dyadic level is too fine for the grid");
  const std::uint32_t N = std::uint32_t{1} << level;
  const std::uint32_t step = n / N;
  const PhiloxKey key = seed.key();
  auto uniform = [&](std::uint64_t k) { return bits_to_open_uniform(philox_bits(k, 0, key)); };

  DyadicPath path;
  path.level = level;
  path.horizon = spec.horizon_T;
  path.seed = seed;
  path.sites.assign(N + 1, 0);

  const auto& fwd = m.forward();
  if (pinned) {
    path.sites[N] = m.pin_site();
  } else {
    const ParityRow& last = fwd.rows.row(n);
    ParityRow ones{last.first, std::vector<double>(last.count(), 1.0)};
    path.sites[N] = inverse_cdf(last, ones, uniform(N));
  }

  const bool unit = m.weights().unit();
  const std::vector<double> binom = unit ? binomial_row(step) : std::vector<double>{};
  const std::int64_t M = spec.half_sites();
  for (std::uint32_t k = N; k >= 1; --k) {
    const std::uint32_t t_prev = (k - 1) * step;
    const std::int64_t x = path.sites[k];
    ParityRow slab;
    if (unit) {
      // Z(t_prev, x - step + 2j; t_k, x) is proportional to C(step, j).
      std::int64_t first = x - static_cast<std::int64_t>(step);
      std::size_t j0 = 0;
      while (first < -M) {
        first += 2;
        ++j0;
      }
      std::int64_t last = x + static_cast<std::int64_t>(step);
      while (last > M) last -= 2;
      slab.first = first;
      slab.v.assign(binom.begin() + static_cast<std::ptrdiff_t>(j0),
                    binom.begin() + static_cast<std::ptrdiff_t>(j0 + (last - first) / 2 + 1));
    } else {
      slab = backward_point_to_point(m.weights(), t_prev, k * step, x);
    }
    path.sites[k - 1] = inverse_cdf(fwd.rows.row(t_prev), slab, uniform(k - 1));
  }

  path.times.resize(N + 1);
  path.positions.resize(N + 1);
  for (std::uint32_t k = 0; k <= N; ++k) {
    path.times[k] = spec.time(static_cast<std::int64_t>(k) * step);
    path.positions[k] = spec.position(path.sites[k]);
  }
  return path;
}

}  // namespace

PolymerMeasure::PolymerMeasure(std::shared_ptr<const Environment> env, double beta, MeasureOptions opts)
    : opts_(opts) {
  if (!env) throw ConfigError("polymer measure needs an environment");
  FieldBuildOptions fo;
  fo.keep_every = opts.keep_every;
  forward_ = build_field_transfer_matrix(env, beta, 0, 0, fo);
  init();
}

PolymerMeasure::PolymerMeasure(ContinuumFieldSlice forward, std::shared_ptr<const Environment> env,
                               MeasureOptions opts)
    : opts_(opts), forward_(std::move(forward)) {
  if (!env) throw ConfigError("polymer measure needs an environment");
  if (forward_.scheme != Scheme::transfer_matrix || forward_.start_time != 0 || forward_.start_site != 0)
    throw ConfigError("polymer measure needs a transfer-matrix slice started at the origin");
  if (forward_.spec.n_time != env->spec().n_time || forward_.spec.n_sites() != env->spec().n_sites())
    throw ConfigError("slice and environment lattices differ");
  forward_.env = std::move(env);
  init();
}

void PolymerMeasure::init() {
  const LatticeSpec& sp = forward_.spec;
  const std::uint32_t n = sp.n_time;
  if (forward_.end_time() != n) throw ConfigError("polymer measure needs the field up to the horizon");
  weights_ = std::make_shared<WeightField>(forward_.env, lattice_coupling(forward_.beta, sp));
  if (opts_.cache_weights) weights_->cache(0);
  const RecursionOptions ro{Accumulation::automatic, opts_.keep_every};
  if (opts_.mode == EndpointMode::free) {
    log_normalizer_ = std::log(point_to_line_integral(forward_, n).value);
    if (opts_.build_backward) to_line_ = backward_partition(*weights_, n, 0, ro);
  } else {
    const Corner c = parity_corner(sp, n, opts_.pin_x);
    pin_site_ = c.frac > 0.5 ? c.lo + 2 : c.lo;
    log_normalizer_ = forward_.log_density(n, pin_site_);
    if (opts_.build_backward) to_point_ = backward_point_to_point_field(*weights_, n, pin_site_, ro);
  }
  if (!std::isfinite(log_normalizer_)) throw DomainError("polymer normaliser is not positive");
}

std::uint32_t PolymerMeasure::time_step(double t) const {
  const double T = spec().horizon_T;
  if (!(t >= 0.0) || t > T * (1.0 + 1e-12)) throw DomainError("time outside the horizon");
  return static_cast<std::uint32_t>(std::llround(t / spec().dt()));
}

double PolymerMeasure::log_terminal(std::uint32_t t, std::int64_t s) const {
  const std::uint32_t n = spec().n_time;
  if (opts_.mode == EndpointMode::free) {
    if (t == n) return std::llabs(s) <= spec().half_sites() ? 0.0 : kNegInf;
    if (!to_line_) throw ConfigError("measure was built without the backward field");
    return to_line_->rows.log_value(t, s);
  }
  if (t >= n) throw DomainError("pinned measure has no density at the terminal time");
  if (!to_point_) throw ConfigError("measure was built without the backward field");
  return to_point_->rows.log_value(t, s) - std::log(2.0 * spec().dx());
}

double PolymerMeasure::log_point_to_point(std::uint32_t i, std::int64_t a, std::uint32_t j, std::int64_t b) const {
  if (j <= i) throw DomainError("point-to-point weight needs j > i");
  if (std::llabs(a) > spec().half_sites() || std::llabs(b) > spec().half_sites()) return kNegInf;
  if (i == 0 && a == 0 && forward_.rows.stores(j)) return forward_.log_density(j, b);
  const PointToPointField z = forward_partition(*weights_, i, a, j, {Accumulation::automatic, j - i});
  return z.rows.log_value(j, b) - std::log(2.0 * spec().dx());
}

double continuum_fdd_density(const PolymerMeasure& m, const std::vector<double>& times,
                             const std::vector<double>& positions) {
  if (times.empty() || times.size() != positions.size()) throw DomainError("fdd needs matching, nonempty lists");
  const LatticeSpec& sp = m.spec();
  std::vector<std::uint32_t> steps(times.size());
  std::vector<Corner> corners(times.size());
  for (std::size_t j = 0; j < times.size(); ++j) {
    if (!(times[j] > 0.0) || !(times[j] < sp.horizon_T)) throw DomainError("fdd times must lie in (0, T)");
    steps[j] = m.time_step(times[j]);
    if (steps[j] == 0 || steps[j] >= sp.n_time || (j > 0 && steps[j] <= steps[j - 1]))
      throw DomainError("fdd times do not resolve to increasing interior grid times");
    corners[j] = parity_corner(sp, steps[j], positions[j]);
  }
  const double log_f = interpolate_log(corners, [&](const std::vector<std::int64_t>& s) {
    double acc = 0.0;
    std::uint32_t t_prev = 0;
    std::int64_t s_prev = 0;
    for (std::size_t j = 0; j < s.size(); ++j) {
      acc += m.log_point_to_point(t_prev, s_prev, steps[j], s[j]);
      if (!std::isfinite(acc)) return kNegInf;
      t_prev = steps[j];
      s_prev = s[j];
    }
    return acc + m.log_terminal(t_prev, s_prev) - m.log_normalizer();
  });
  return std::isfinite(log_f) ? std::exp(log_f) : 0.0;
}

double markov_transition_density(const PolymerMeasure& m, double s, double y, double t, double x) {
  const std::uint32_t i = m.time_step(s);
  const std::uint32_t j = m.time_step(t);
  if (j <= i) throw DomainError("transition density needs s < t on the grid");
  const std::vector<Corner> corners{parity_corner(m.spec(), i, y), parity_corner(m.spec(), j, x)};
  const double log_q = interpolate_log(corners, [&](const std::vector<std::int64_t>& c) {
    const double from = m.log_terminal(i, c[0]);
    if (!std::isfinite(from)) return kNegInf;
    return m.log_point_to_point(i, c[0], j, c[1]) + m.log_terminal(j, c[1]) - from;
  });
  return std::isfinite(log_q) ? std::exp(log_q) : 0.0;
}

DyadicPath sample_cdrp_path(const PolymerMeasure& m, int level, SeedSpec seed) {
  return sample_impl(m, level, seed, m.mode() == EndpointMode::pinned);
}

DyadicPath sample_point_to_point_path(const PolymerMeasure& m, int level, SeedSpec seed) {
  if (m.mode() != EndpointMode::pinned) throw ConfigError("point-to-point sampling needs a pinned measure");
  return sample_impl(m, level, seed, true);
}

RescaledPath rescale_length(const DyadicPath& path, const Environment& env, double beta) {
  const double T = path.horizon;
  if (!(T > 0.0)) throw DomainError("horizon must be positive");
  const LatticeSpec& sp = env.spec();
  if (std::fabs(sp.horizon_T - T) > 1e-12 * T) throw DomainError("path and environment horizons differ");
  const double root = std::sqrt(T);
  const LatticeSpec unit{sp.n_time, 1.0, sp.space_halfwidth_L / root};
  RescaledPath out{path, beta * std::sqrt(root), env.with_spec(unit)};
  out.path.horizon = 1.0;
  for (double& t : out.path.times) t /= T;
  for (std::size_t k = 0; k < out.path.positions.size(); ++k)
    out.path.positions[k] = unit.position(out.path.sites[k]);
  return out;
}

}  // namespace cdrp
