#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace cdrp {

enum class Accumulation {
  automatic,  // rescale a row when its peak leaves the rescale band; per-site logs once
              // a row spans more than the double range
  linear,     // never rescale
  log,        // per-site logs throughout
};

/// One parity class of a time slice: site first + step * k carries v[k] * exp(log_scale).
/// Lattice recursions use step 2; full-grid rows use step 1. Sites not of that form
/// carry zero.
struct ParityRow {
  std::int64_t first = 0;
  std::vector<double> v;
  double log_scale = 0.0;
  std::int64_t step = 2;

  std::size_t count() const { return v.size(); }
  std::int64_t last() const { return first + step * (static_cast<std::int64_t>(v.size()) - 1); }
  bool holds(std::int64_t site) const {
    return !v.empty() && site >= first && site <= last() && (site - first) % step == 0;
  }
  std::int64_t site(std::size_t k) const { return first + step * static_cast<std::int64_t>(k); }
  double mantissa(std::int64_t site) const {
    return holds(site) ? v[static_cast<std::size_t>((site - first) / step)] : 0.0;
  }
  double value(std::int64_t site) const;
  double log_value(std::int64_t site) const;
};

/// Bookkeeping shared by the lattice recursions.
namespace rows {

/// Automatic mode keeps row peaks in [1 / kRescaleBand, kRescaleBand], so entries far
/// below the peak stay clear of the subnormal range.
inline constexpr double kRescaleBand = 1e20;

/// Sites reachable in one step from `src`, clipped to [-half_sites, half_sites].
/// Returns false when nothing survives the clipping.
bool next_range(const ParityRow& src, std::int64_t half_sites, std::int64_t& first, std::size_t& count);

/// Every window site of the parity class of `parity_site`.
void window_range(std::int64_t parity_site, std::int64_t half_sites, std::int64_t& first, std::size_t& count);

/// dst.v[k] = 0.5 * w[k] * (u(dst.site(k) - 1) + u(dst.site(k) + 1)) with u read from
/// `src_values` laid out on src_first + 2j (zero elsewhere). dst.first and size are
/// preset by the caller. w == nullptr means unit weights.
void stencil(std::int64_t src_first, const std::vector<double>& src_values, const double* w, ParityRow& dst);

/// Applies the rescaling policy; returns true if the row was rescaled.
bool normalize(ParityRow& row, Accumulation mode);

/// Log-domain stencil on rows whose v holds natural logs (-inf for zero):
/// out[k] = lw[k] + log(0.5 * (exp(u(y - 1)) + exp(u(y + 1)))), y = dst_first + 2k.
/// lw == nullptr means unit weights.
void log_stencil(std::int64_t src_first, const std::vector<double>& src_logs, const double* lw,
                 std::int64_t dst_first, std::size_t count, double* out);

/// In-place conversions between the scaled form and per-site logs.
void to_logs(ParityRow& row);
void from_logs(ParityRow& row);

/// True when some positive entry sits below the row peak by more than the margin
/// the scaled form can carry safely.
bool exceeds_range(const ParityRow& row);

}  // namespace rows

}  // namespace cdrp
