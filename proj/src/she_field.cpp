#include "cdrp/she_field.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "cdrp/errors.hpp"
#include "cdrp/simd/dispatch.hpp"

namespace cdrp {

Scheme parse_scheme(std::string_view tag) {
  if (tag == "tm" || tag == "transfer_matrix") return Scheme::transfer_matrix;
  if (tag == "euler") return Scheme::euler;
  throw ConfigError("unknown scheme '" + std::string(tag) + "'");
}

std::string_view to_string(Scheme s) { return s == Scheme::transfer_matrix ? "tm" : "euler"; }

double lattice_coupling(double beta, const LatticeSpec& spec) {
  return beta * std::pow(spec.dt(), 0.25) / std::numbers::sqrt2;
}

double euler_coupling(double beta, const LatticeSpec& spec) { return beta * std::pow(spec.dt(), 0.25); }

const std::vector<double>& euler_heat_taps() {
  static const std::vector<double> taps = [] {
    std::vector<double> t(11);
    double total = 0.0;
    for (int k = 0; k <= 10; ++k) {
      t[k] = std::exp(-0.5 * k * k);
      total += k == 0 ? t[k] : 2.0 * t[k];
    }
    for (double& x : t) x /= total;
    return t;
  }();
  return taps;
}

namespace {

constexpr std::size_t kHalfTaps = 10;

void check_start(const Environment& env, double beta, std::uint32_t start_time, std::int64_t start_site) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw DomainError("beta must be finite and nonnegative");
  if (start_time >= env.spec().n_time) throw DomainError("start time must precede the horizon");
  if (std::llabs(start_site) > env.spec().half_sites()) throw DomainError("start site outside the window");
}

std::uint32_t resolve_end(const Environment& env, std::uint32_t start_time, const FieldBuildOptions& opts) {
  const std::uint32_t end = opts.end_time == 0 ? env.spec().n_time : opts.end_time;
  if (end <= start_time || end > env.spec().n_time) throw DomainError("field end time out of range");
  return end;
}

// dst = K * src on the full window, zero beyond it.
void heat_step(const std::vector<double>& src, std::vector<double>& dst) {
  thread_local std::vector<double> pad;
  pad.assign(src.size() + 2 * kHalfTaps, 0.0);
  std::copy(src.begin(), src.end(), pad.begin() + kHalfTaps);
  dst.resize(src.size());
  simd::active_kernels().convolve_symmetric(pad.data(), src.size(), euler_heat_taps().data(), kHalfTaps,
                                            dst.data());
}

}  // namespace

void euler_multipliers(const Environment& env, double theta, std::uint32_t i, double* out) {
  const LatticeSpec& sp = env.spec();
  const std::int64_t M = sp.half_sites();
  const std::size_t n = sp.n_sites();
  if (theta == 0.0) {
    std::fill(out, out + n, 1.0);
    return;
  }
  thread_local std::vector<double> omega, xi;
  omega.resize(n);
  xi.resize(n);
  env.fill_row(i, -M, n, 1, omega.data());
  // Orthogonal pair rotation. Pairs start on sites of the row's transfer-matrix parity,
  // so (xi_s + xi_{s+1}) / sqrt2 is exactly the transfer-matrix cell value omega_s.
  const std::size_t lead = static_cast<std::size_t>((-M - static_cast<std::int64_t>(i)) & 1);
  xi[0] = omega[0];
  for (std::size_t j = lead; j + 1 < n; j += 2) {
    xi[j] = (omega[j] + omega[j + 1]) / std::numbers::sqrt2;
    xi[j + 1] = (omega[j] - omega[j + 1]) / std::numbers::sqrt2;
  }
  const bool tail_unpaired = ((n - lead) & 1) == 1;
  if (tail_unpaired) xi[n - 1] = omega[n - 1];

  const double lambda_pair = env.dist() == Disorder::gaussian
                                 ? 0.5 * theta * theta
                                 : std::log(0.5 + 0.5 * std::cosh(std::numbers::sqrt2 * theta));
  const double lambda_edge = log_mgf(env.dist(), theta);
  const auto& kt = simd::active_kernels();
  kt.exp_affine(xi.data(), n, theta, lambda_pair, out);
  if (lead == 1) kt.exp_affine(xi.data(), 1, theta, lambda_edge, out);
  if (tail_unpaired) kt.exp_affine(xi.data() + n - 1, 1, theta, lambda_edge, out + n - 1);
}

ContinuumFieldSlice build_field_transfer_matrix(std::shared_ptr<const Environment> env, double beta,
                                                std::uint32_t start_time, std::int64_t start_site,
                                                FieldBuildOptions opts) {
  if (!env) throw ConfigError("field build needs an environment");
  check_start(*env, beta, start_time, start_site);
  const std::uint32_t end = resolve_end(*env, start_time, opts);

  ContinuumFieldSlice slice;
  slice.spec = env->spec();
  slice.beta = beta;
  slice.scheme = Scheme::transfer_matrix;
  slice.seed = env->seed().master_seed;
  slice.start_time = start_time;
  slice.start_site = start_site;
  slice.env = env;

  const WeightField w(env, lattice_coupling(beta, slice.spec));
  PointToPointField z = forward_partition(w, start_time, start_site, end, {opts.accumulation, opts.keep_every});
  const double inv_cell = 1.0 / slice.cell_width();
  for (std::uint32_t t = start_time; t <= end; ++t) {
    if (!z.rows.stores(t)) continue;
    for (double& x : z.rows.slot(t).v) x *= inv_cell;
  }
  slice.rows = std::move(z.rows);
  return slice;
}

ContinuumFieldSlice build_field_euler_mild(std::shared_ptr<const Environment> env, double beta,
                                           std::uint32_t start_time, std::int64_t start_site,
                                           FieldBuildOptions opts) {
  if (!env) throw ConfigError("field build needs an environment");
  check_start(*env, beta, start_time, start_site);
  const std::uint32_t end = resolve_end(*env, start_time, opts);

  ContinuumFieldSlice slice;
  slice.spec = env->spec();
  slice.beta = beta;
  slice.scheme = Scheme::euler;
  slice.seed = env->seed().master_seed;
  slice.start_time = start_time;
  slice.start_site = start_site;
  slice.env = env;
  slice.rows = RowSeries(start_time, end, opts.keep_every);

  const std::int64_t M = slice.spec.half_sites();
  const std::size_t n = slice.spec.n_sites();
  const double theta = euler_coupling(beta, slice.spec);

  ParityRow cur{-M, std::vector<double>(n, 0.0), 0.0, 1};
  cur.v[static_cast<std::size_t>(start_site + M)] = 1.0 / slice.spec.dx();
  std::vector<double> diffused, mult(n);
  for (std::uint32_t t = start_time;; ++t) {
    if (slice.rows.stores(t)) slice.rows.slot(t) = cur;
    if (t == end) break;
    heat_step(cur.v, diffused);
    euler_multipliers(*env, theta, t + 1, mult.data());
    simd::active_kernels().product(mult.data(), diffused.data(), n, cur.v.data());
    rows::normalize(cur, opts.accumulation);
  }
  return slice;
}

LineIntegral point_to_line_integral(const ContinuumFieldSlice& slice, std::uint32_t t) {
  if (t <= slice.start_time) throw DomainError("point-to-line integral needs t after the start");
  const ParityRow& row = slice.rows.row(t);
  double sum = 0.0;
  for (double x : row.v) sum += x;
  LineIntegral out;
  out.value = sum * std::exp(row.log_scale) * slice.cell_width();
  const double tau = slice.spec.time(t) - slice.spec.time(slice.start_time);
  const double edge = slice.spec.position(slice.spec.half_sites()) - std::fabs(slice.spec.position(slice.start_site));
  out.tail_bound = std::erfc(edge / std::sqrt(2.0 * tau));
  return out;
}

double chapman_kolmogorov_residual(const ContinuumFieldSlice& slice, std::uint32_t r, std::uint32_t t,
                                   std::int64_t x) {
  if (!slice.env) throw ConfigError("Chapman-Kolmogorov check needs the environment");
  if (r <= slice.start_time || r >= t) throw DomainError("intermediate time must lie strictly inside (s, t)");
  const ParityRow& mid = slice.rows.row(r);
  const double target = slice.log_density(t, x);
  if (!std::isfinite(target)) throw DomainError("end point carries no mass");

  // back(z) is the weight carried from (r, z) to (t, x), so that
  // z(s,y; t,x) = sum_z z(s,y; r,z) back(z).
  ParityRow back;
  if (slice.scheme == Scheme::transfer_matrix) {
    const WeightField w(slice.env, lattice_coupling(slice.beta, slice.spec));
    back = backward_point_to_point(w, r, t, x, Accumulation::automatic);
  } else {
    const std::int64_t M = slice.spec.half_sites();
    const std::size_t n = slice.spec.n_sites();
    const double theta = euler_coupling(slice.beta, slice.spec);
    back = ParityRow{-M, std::vector<double>(n, 0.0), 0.0, 1};
    back.v[static_cast<std::size_t>(x + M)] = 1.0;
    std::vector<double> mult(n), weighted(n);
    for (std::uint32_t i = t; i > r; --i) {
      euler_multipliers(*slice.env, theta, i, mult.data());
      simd::active_kernels().product(mult.data(), back.v.data(), n, weighted.data());
      heat_step(weighted, back.v);
      rows::normalize(back, Accumulation::automatic);
    }
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < mid.count(); ++k) acc += mid.v[k] * back.mantissa(mid.site(k));
  const double lhs = std::log(acc) + mid.log_scale + back.log_scale;
  return std::fabs(std::expm1(lhs - target));
}

}  // namespace cdrp
