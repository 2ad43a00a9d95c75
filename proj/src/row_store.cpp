#include "cdrp/row_store.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "cdrp/simd/dispatch.hpp"

namespace cdrp {

double ParityRow::value(std::int64_t site) const {
  const double m = mantissa(site);
  return m == 0.0 ? 0.0 : m * std::exp(log_scale);
}

double ParityRow::log_value(std::int64_t site) const {
  const double m = mantissa(site);
  return m > 0.0 ? std::log(m) + log_scale : -std::numeric_limits<double>::infinity();
}

namespace rows {

namespace {

std::int64_t floor_mod2(std::int64_t a) { return a & 1; }

}  // namespace

void window_range(std::int64_t parity_site, std::int64_t half_sites, std::int64_t& first, std::size_t& count) {
  first = -half_sites + (floor_mod2(parity_site + half_sites));
  const std::int64_t last = half_sites - floor_mod2(half_sites - parity_site);
  count = last < first ? 0 : static_cast<std::size_t>((last - first) / 2 + 1);
}

bool next_range(const ParityRow& src, std::int64_t half_sites, std::int64_t& first, std::size_t& count) {
  if (src.v.empty()) return false;
  std::int64_t lo = src.first - 1;
  std::int64_t hi = src.last() + 1;
  if (lo < -half_sites) lo += 2;
  if (hi > half_sites) hi -= 2;
  if (hi < lo) return false;
  first = lo;
  count = static_cast<std::size_t>((hi - lo) / 2 + 1);
  return true;
}

void stencil(std::int64_t src_first, const std::vector<double>& src_values, const double* w, ParityRow& dst) {
  const std::size_t n = dst.v.size();
  if (n == 0) return;
  // Pad the source so that neighbour reads outside it see zeros. With src index
  // j = (site - src_first) / 2, the left neighbour of dst site k has
  // j = off + k, the right one off + k + 1.
  const std::int64_t off = (dst.first - 1 - src_first) / 2;
  const std::int64_t lo_idx = std::min<std::int64_t>(off, 0);
  const std::int64_t hi_idx = std::max<std::int64_t>(off + static_cast<std::int64_t>(n) + 1,
                                                     static_cast<std::int64_t>(src_values.size()));
  thread_local std::vector<double> pad;
  thread_local std::vector<double> ones;
  pad.assign(static_cast<std::size_t>(hi_idx - lo_idx + 1), 0.0);
  std::copy(src_values.begin(), src_values.end(), pad.begin() + (-lo_idx));
  const double* left = pad.data() + (off - lo_idx);
  if (!w) {
    if (ones.size() < n) ones.assign(n, 1.0);
    w = ones.data();
  }
  simd::active_kernels().half_weighted_sum(left, left + 1, w, n, dst.v.data());
}

bool normalize(ParityRow& row, Accumulation mode) {
  if (mode == Accumulation::linear || row.v.empty()) return false;
  const double peak = *std::max_element(row.v.begin(), row.v.end());
  if (!(peak > 0.0) || !std::isfinite(peak)) return false;
  if (mode == Accumulation::automatic && peak <= kRescaleBand && peak >= 1.0 / kRescaleBand) return false;
  const double inv = 1.0 / peak;
  for (double& x : row.v) x *= inv;
  row.log_scale += std::log(peak);
  return true;
}

void log_stencil(std::int64_t src_first, const std::vector<double>& src_logs, const double* lw,
                 std::int64_t dst_first, std::size_t count, double* out) {
  constexpr double ninf = -std::numeric_limits<double>::infinity();
  const double log_half = -std::numbers::ln2;
  const auto n = static_cast<std::int64_t>(src_logs.size());
  auto at = [&](std::int64_t site) {
    const std::int64_t d = site - src_first;
    if (d < 0 || (d & 1) != 0 || d / 2 >= n) return ninf;
    return src_logs[static_cast<std::size_t>(d / 2)];
  };
  for (std::size_t k = 0; k < count; ++k) {
    const std::int64_t y = dst_first + 2 * static_cast<std::int64_t>(k);
    const double a = at(y - 1), b = at(y + 1);
    const double hi = std::max(a, b);
    if (hi == ninf) {
      out[k] = ninf;
      continue;
    }
    out[k] = hi + std::log1p(std::exp(std::min(a, b) - hi)) + log_half + (lw ? lw[k] : 0.0);
  }
}

void to_logs(ParityRow& row) {
  for (double& x : row.v) x = x > 0.0 ? std::log(x) + row.log_scale : -std::numeric_limits<double>::infinity();
  row.log_scale = 0.0;
}

void from_logs(ParityRow& row) {
  if (row.v.empty()) return;
  const double peak = *std::max_element(row.v.begin(), row.v.end());
  if (!std::isfinite(peak)) {
    std::fill(row.v.begin(), row.v.end(), 0.0);
    row.log_scale = 0.0;
    return;
  }
  for (double& x : row.v) x = std::exp(x - peak);
  row.log_scale = peak;
}

bool exceeds_range(const ParityRow& row) {
  // One step at strong disorder can move a ratio by tens of decades, so switch well
  // before entries reach the subnormal range.
  double peak = 0.0, low = std::numeric_limits<double>::infinity();
  for (double x : row.v) {
    if (!(x > 0.0)) continue;
    peak = std::max(peak, x);
    low = std::min(low, x);
  }
  return peak > 0.0 && low / peak < 1e-250;
}

}  // namespace rows

}  // namespace cdrp
