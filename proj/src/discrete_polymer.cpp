#include "cdrp/discrete_polymer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "cdrp/errors.hpp"
#include "cdrp/parallel.hpp"
#include "cdrp/simd/dispatch.hpp"

namespace cdrp {

// ---------------------------------------------------------------- weights

WeightField::WeightField(std::shared_ptr<const Environment> env, double coupling)
    : env_(std::move(env)), coupling_(coupling), shift_(0.0) {
  if (!env_) throw ConfigError("weight field needs an environment");
  if (!std::isfinite(coupling_) || coupling_ < 0.0) throw DomainError("coupling must be finite and nonnegative");
  shift_ = log_mgf(env_->dist(), coupling_);
}

void WeightField::cache(int parity) {
  if (unit() || cached_parity_ == parity) return;
  const auto& sp = spec();
  const std::int64_t M = sp.half_sites();
  const std::size_t stride = static_cast<std::size_t>(M) + 1;
  std::vector<double> data(static_cast<std::size_t>(sp.n_time) * stride, 0.0);
  cached_parity_ = -1;  // fill() must read the environment while the cache is built
  parallel_for(sp.n_time, [&](std::size_t b, std::size_t e) {
    for (std::size_t r = b; r < e; ++r) {
      const auto i = static_cast<std::uint32_t>(r + 1);
      std::int64_t first;
      std::size_t count;
      rows::window_range(static_cast<std::int64_t>(i) + parity, M, first, count);
      fill(i, first, count, data.data() + r * stride);
    }
  });
  cache_ = std::move(data);
  cached_parity_ = parity;
}

void WeightField::fill(std::uint32_t i, std::int64_t first, std::size_t count, double* out) const {
  if (count == 0) return;
  if (unit()) {
    std::fill(out, out + count, 1.0);
    return;
  }
  const std::int64_t M = spec().half_sites();
  if (cached_parity_ >= 0 && ((first - static_cast<std::int64_t>(i) - cached_parity_) & 1) == 0 && i >= 1 &&
      i <= spec().n_time) {
    std::int64_t row_first;
    std::size_t row_count;
    rows::window_range(first, M, row_first, row_count);
    const std::int64_t k0 = (first - row_first) / 2;
    if (k0 >= 0 && static_cast<std::size_t>(k0) + count <= row_count) {
      const double* src = cache_.data() + static_cast<std::size_t>(i - 1) * (static_cast<std::size_t>(M) + 1) + k0;
      std::copy(src, src + count, out);
      return;
    }
  }
  thread_local std::vector<double> omega;
  omega.resize(count);
  env_->fill_row(i, first, count, 2, omega.data());
  simd::active_kernels().exp_affine(omega.data(), count, coupling_, shift_, out);
}

void WeightField::fill_log(std::uint32_t i, std::int64_t first, std::size_t count, double* out) const {
  if (unit()) {
    std::fill(out, out + count, 0.0);
    return;
  }
  env_->fill_row(i, first, count, 2, out);
  for (std::size_t k = 0; k < count; ++k) out[k] = coupling_ * out[k] - shift_;
}

double WeightField::at(std::uint32_t i, std::int64_t site) const {
  double w;
  fill(i, site, 1, &w);
  return w;
}

// ---------------------------------------------------------------- row series

RowSeries::RowSeries(std::uint32_t first_time, std::uint32_t last_time, std::uint32_t keep_every)
    : first_time_(first_time), last_time_(last_time), keep_every_(std::max<std::uint32_t>(keep_every, 1)) {
  if (last_time < first_time) throw DomainError("row series with negative length");
  const std::uint32_t span = last_time - first_time;
  rows_.resize(span / keep_every_ + 1 + (span % keep_every_ != 0 ? 1 : 0));
}

bool RowSeries::stores(std::uint32_t t) const {
  return t >= first_time_ && t <= last_time_ && ((t - first_time_) % keep_every_ == 0 || t == last_time_);
}

std::size_t RowSeries::index(std::uint32_t t) const {
  if (!stores(t)) throw DomainError("time step " + std::to_string(t) + " is not retained");
  const std::uint32_t off = t - first_time_;
  return off % keep_every_ == 0 ? off / keep_every_ : rows_.size() - 1;
}

const ParityRow& RowSeries::row(std::uint32_t t) const { return rows_[index(t)]; }
ParityRow& RowSeries::slot(std::uint32_t t) { return rows_[index(t)]; }

// ---------------------------------------------------------------- recursions

namespace {

void check_time(const WeightField& w, std::uint32_t t) {
  if (t > w.spec().n_time) throw DomainError("time step beyond the environment horizon");
}

void check_site(const WeightField& w, std::int64_t s) {
  if (std::llabs(s) > w.spec().half_sites()) throw DomainError("site outside the spatial window");
}

// One backward step: dst(y) = 1/2 sum w(t+1, y+-1) src(y+-1), src living at t + 1.
void backward_step(const WeightField& w, std::uint32_t t, const ParityRow& src, ParityRow& dst) {
  thread_local std::vector<double> weights, u;
  weights.resize(src.count());
  u.resize(src.count());
  w.fill(t + 1, src.first, src.count(), weights.data());
  simd::active_kernels().product(weights.data(), src.v.data(), src.count(), u.data());
  rows::stencil(src.first, u, nullptr, dst);
  dst.log_scale = src.log_scale;
}

// backward_step on rows holding per-site logs.
void backward_log_step(const WeightField& w, std::uint32_t t, const ParityRow& src, ParityRow& dst) {
  thread_local std::vector<double> u;
  u.resize(src.count());
  w.fill_log(t + 1, src.first, src.count(), u.data());
  for (std::size_t k = 0; k < u.size(); ++k) u[k] += src.v[k];
  rows::log_stencil(src.first, u, nullptr, dst.first, dst.count(), dst.v.data());
  dst.log_scale = 0.0;
}

// Rows start in scaled form. Automatic mode moves them to per-site logs for the rest
// of the recursion once a row spans more than the scaled form can hold.
bool switch_to_logs(ParityRow& row, Accumulation mode) {
  if (mode != Accumulation::automatic || !rows::exceeds_range(row)) return false;
  rows::to_logs(row);
  return true;
}

ParityRow stored(const ParityRow& row, bool logs) {
  if (!logs) return row;
  ParityRow out = row;
  rows::from_logs(out);
  return out;
}

}  // namespace

PointToPointField forward_partition(const WeightField& w, std::uint32_t start_time, std::int64_t start_site,
                                    std::uint32_t end_time, RecursionOptions opts) {
  check_time(w, end_time);
  check_site(w, start_site);
  if (end_time < start_time) throw DomainError("forward recursion needs end_time >= start_time");
  const std::int64_t M = w.spec().half_sites();

  PointToPointField field;
  field.start_time = start_time;
  field.start_site = start_site;
  field.rows = RowSeries(start_time, end_time, opts.keep_every);

  bool logs = opts.accumulation == Accumulation::log;
  ParityRow cur{start_site, {logs ? 0.0 : 1.0}, 0.0};
  std::vector<double> weights;
  for (std::uint32_t t = start_time;; ++t) {
    if (field.rows.stores(t)) field.rows.slot(t) = stored(cur, logs);
    if (t == end_time) break;
    ParityRow next;
    std::size_t count = 0;
    if (rows::next_range(cur, M, next.first, count)) {
      next.v.resize(count);
      weights.resize(count);
      if (logs) {
        w.fill_log(t + 1, next.first, count, weights.data());
        rows::log_stencil(cur.first, cur.v, weights.data(), next.first, count, next.v.data());
        field.rows.mark_log_domain();
      } else {
        w.fill(t + 1, next.first, count, weights.data());
        rows::stencil(cur.first, cur.v, weights.data(), next);
        next.log_scale = cur.log_scale;
        rows::normalize(next, opts.accumulation);
        logs = switch_to_logs(next, opts.accumulation);
      }
    } else {
      next.first = cur.first + 1;
    }
    cur = std::move(next);
  }
  return field;
}

PointToLineField backward_partition(const WeightField& w, std::uint32_t horizon, int parity,
                                    RecursionOptions opts, bool origin_cone) {
  check_time(w, horizon);
  const std::int64_t M = w.spec().half_sites();
  PointToLineField field;
  field.horizon = horizon;
  field.parity = parity & 1;
  field.rows = RowSeries(0, horizon, opts.keep_every);
  if (origin_cone && field.parity != 0) throw DomainError("the origin cone needs parity 0");

  auto range = [&](std::uint32_t t, std::int64_t& first, std::size_t& count) {
    rows::window_range(static_cast<std::int64_t>(t) + field.parity, M, first, count);
    if (!origin_cone || static_cast<std::int64_t>(t) >= M) return;
    first = -static_cast<std::int64_t>(t);
    count = t + 1;
  };
  bool logs = opts.accumulation == Accumulation::log;
  ParityRow cur;
  std::size_t count;
  range(horizon, cur.first, count);
  cur.v.assign(count, logs ? 0.0 : 1.0);
  for (std::uint32_t t = horizon;; --t) {
    if (field.rows.stores(t)) field.rows.slot(t) = stored(cur, logs);
    if (t == 0) break;
    ParityRow next;
    range(t - 1, next.first, count);
    next.v.resize(count);
    if (logs) {
      backward_log_step(w, t - 1, cur, next);
      field.rows.mark_log_domain();
    } else {
      backward_step(w, t - 1, cur, next);
      rows::normalize(next, opts.accumulation);
      logs = switch_to_logs(next, opts.accumulation);
    }
    cur = std::move(next);
  }
  return field;
}

PointToPointField backward_point_to_point_field(const WeightField& w, std::uint32_t end_time,
                                                std::int64_t end_site, RecursionOptions opts) {
  check_time(w, end_time);
  check_site(w, end_site);
  const std::int64_t M = w.spec().half_sites();
  PointToPointField field;
  field.start_time = end_time;
  field.start_site = end_site;
  field.rows = RowSeries(0, end_time, opts.keep_every);
  bool logs = opts.accumulation == Accumulation::log;
  ParityRow cur{end_site, {logs ? 0.0 : 1.0}, 0.0};
  for (std::uint32_t t = end_time;; --t) {
    if (field.rows.stores(t)) field.rows.slot(t) = stored(cur, logs);
    if (t == 0) break;
    ParityRow next;
    std::size_t count = 0;
    if (rows::next_range(cur, M, next.first, count)) {
      next.v.resize(count);
      if (logs) {
        backward_log_step(w, t - 1, cur, next);
        field.rows.mark_log_domain();
      } else {
        backward_step(w, t - 1, cur, next);
        rows::normalize(next, opts.accumulation);
        logs = switch_to_logs(next, opts.accumulation);
      }
    } else {
      next.first = cur.first - 1;
    }
    cur = std::move(next);
  }
  return field;
}

ParityRow backward_point_to_point(const WeightField& w, std::uint32_t from_time, std::uint32_t end_time,
                                  std::int64_t end_site, Accumulation mode) {
  check_time(w, end_time);
  check_site(w, end_site);
  if (end_time < from_time) throw DomainError("backward recursion needs from_time <= end_time");
  const std::int64_t M = w.spec().half_sites();
  const auto& k = simd::active_kernels();
  // Hot in the path sampler, so the rows live in reused buffers. pad holds the weighted
  // row at t with one zero on each side; the row at t - 1 is its pairwise half sum.
  thread_local std::vector<double> cur, pad, ones;
  cur.assign(1, 1.0);
  std::int64_t first = end_site;
  double log_scale = 0.0;
  for (std::uint32_t t = end_time; t > from_time; --t) {
    const std::size_t n = cur.size();
    pad.resize(n + 2);
    pad[0] = pad[n + 1] = 0.0;
    w.fill(t, first, n, pad.data() + 1);
    k.product(pad.data() + 1, cur.data(), n, pad.data() + 1);
    std::size_t k0 = 0, k1 = n;  // destination indices, site first - 1 + 2 k
    if (first - 1 < -M) k0 = 1;
    if (first - 1 + 2 * static_cast<std::int64_t>(n) > M) k1 = n - 1;
    if (k1 < k0) return ParityRow{first - 1, {}, 0.0};
    const std::size_t count = k1 - k0 + 1;
    if (ones.size() < count) ones.assign(count, 1.0);
    cur.resize(count);
    k.half_weighted_sum(pad.data() + k0, pad.data() + k0 + 1, ones.data(), count, cur.data());
    first = first - 1 + 2 * static_cast<std::int64_t>(k0);
    if (mode != Accumulation::linear) {
      const double peak = *std::max_element(cur.begin(), cur.end());
      if (peak > 0.0 && std::isfinite(peak) &&
          (mode == Accumulation::log || peak > rows::kRescaleBand || peak < 1.0 / rows::kRescaleBand)) {
        const double inv = 1.0 / peak;
        for (double& x : cur) x *= inv;
        log_scale += std::log(peak);
      }
    }
  }
  return ParityRow{first, cur, log_scale};
}

// ---------------------------------------------------------------- path law

DiscretePathLaw::DiscretePathLaw(std::shared_ptr<const Environment> env, double beta, std::uint32_t horizon,
                                 RecursionOptions opts)
    : weights_(std::move(env), beta), horizon_(horizon) {
  if (horizon == 0) throw DomainError("horizon must be positive");
  opts.keep_every = 1;
  backward_ = backward_partition(weights_, horizon, 0, opts, true);
}

StepProbabilities DiscretePathLaw::transition_probabilities(std::uint32_t i, std::int64_t x) const {
  if (i >= horizon_) throw DomainError("no transition out of the terminal time");
  if (std::llabs(x) > static_cast<std::int64_t>(i) || ((x + i) & 1) != 0)
    throw DomainError("site is not reachable from the origin");
  const ParityRow& here = backward_.rows.row(i);
  const ParityRow& next = backward_.rows.row(i + 1);
  const double b = here.mantissa(x);
  if (!(b > 0.0)) throw DomainError("site has zero point-to-line weight");
  const double scale = std::exp(next.log_scale - here.log_scale) / b;
  StepProbabilities p;
  const double up = next.holds(x + 1) ? 0.5 * weights_.at(i + 1, x + 1) * next.mantissa(x + 1) * scale : 0.0;
  const double down = next.holds(x - 1) ? 0.5 * weights_.at(i + 1, x - 1) * next.mantissa(x - 1) * scale : 0.0;
  p.raw_sum = up + down;
  p.p_up = std::clamp(up, 0.0, 1.0);
  p.p_down = 1.0 - p.p_up;
  return p;
}

std::vector<std::int64_t> sample_discrete_path(const DiscretePathLaw& law, SeedSpec seed) {
  const PhiloxKey key = seed.key();
  std::vector<std::int64_t> path(law.horizon() + 1, 0);
  for (std::uint32_t i = 0; i < law.horizon(); ++i) {
    const double u = bits_to_open_uniform(philox_bits(i, 0, key));
    const StepProbabilities p = law.transition_probabilities(i, path[i]);
    path[i + 1] = path[i] + (u < p.p_up ? 1 : -1);
  }
  return path;
}

double discrete_fdd(const DiscretePathLaw& law, const std::vector<std::uint32_t>& times,
                    const std::vector<std::int64_t>& positions) {
  if (times.size() != positions.size() || times.empty()) throw DomainError("fdd needs matching, nonempty lists");
  std::uint32_t t_prev = 0;
  std::int64_t x_prev = 0;
  double log_p = 0.0;
  for (std::size_t m = 0; m < times.size(); ++m) {
    const std::uint32_t t = times[m];
    const std::int64_t x = positions[m];
    if (t > law.horizon()) throw DomainError("fdd time beyond the horizon");
    if (m > 0 && t <= t_prev) throw DomainError("fdd times must be strictly increasing");
    const std::int64_t gap = static_cast<std::int64_t>(t - t_prev);
    if (std::llabs(x - x_prev) > gap || ((x - x_prev - gap) & 1) != 0) return 0.0;
    if (t > t_prev) {
      const PointToPointField z = forward_partition(law.weights(), t_prev, x_prev, t, {Accumulation::automatic, t - t_prev});
      log_p += z.rows.log_value(t, x);
    }
    t_prev = t;
    x_prev = x;
  }
  log_p += law.point_to_line().rows.log_value(t_prev, x_prev) - law.log_partition();
  return std::clamp(std::exp(log_p), 0.0, 1.0);
}

}  // namespace cdrp
