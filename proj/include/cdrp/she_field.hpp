#pragma once

#include <cstdint>
#include <memory>

#include "cdrp/discrete_polymer.hpp"
#include "cdrp/env_noise.hpp"

namespace cdrp {

enum class Scheme : std::uint8_t { transfer_matrix = 0, euler = 1 };

Scheme parse_scheme(std::string_view tag);
std::string_view to_string(Scheme s);

/// Lattice coupling of the transfer matrix: beta * dt^{1/4} / sqrt(2). The parity
/// sublattice has cell width 2 dx, which is where the 1/sqrt(2) comes from.
double lattice_coupling(double beta, const LatticeSpec& spec);

/// Per-cell noise strength of the Euler scheme: beta * dt^{1/4}.
double euler_coupling(double beta, const LatticeSpec& spec);

struct FieldBuildOptions {
  std::uint32_t keep_every = 1;
  std::uint32_t end_time = 0;  // 0 means the full horizon
  Accumulation accumulation = Accumulation::automatic;
};

/// Grid approximation of z(s, y; t, x) for a fixed start (s, y). Rows hold densities:
/// transfer-matrix rows live on the parity sublattice (cell width 2 dx), Euler rows on
/// the full grid (cell width dx).
struct ContinuumFieldSlice {
  LatticeSpec spec;
  double beta = 0.0;
  Scheme scheme = Scheme::transfer_matrix;
  std::uint64_t seed = 0;
  std::uint32_t start_time = 0;
  std::int64_t start_site = 0;
  RowSeries rows;
  std::shared_ptr<const Environment> env;  // null when loaded from a snapshot

  double cell_width() const { return scheme == Scheme::transfer_matrix ? 2.0 * spec.dx() : spec.dx(); }
  std::uint32_t end_time() const { return rows.last_time(); }
  double density(std::uint32_t t, std::int64_t site) const { return rows.value(t, site); }
  double log_density(std::uint32_t t, std::int64_t site) const { return rows.log_value(t, site); }
};

ContinuumFieldSlice build_field_transfer_matrix(std::shared_ptr<const Environment> env, double beta,
                                                std::uint32_t start_time = 0, std::int64_t start_site = 0,
                                                FieldBuildOptions opts = {});

ContinuumFieldSlice build_field_euler_mild(std::shared_ptr<const Environment> env, double beta,
                                           std::uint32_t start_time = 0, std::int64_t start_site = 0,
                                           FieldBuildOptions opts = {});

struct LineIntegral {
  double value = 0.0;
  double tail_bound = 0.0;  // Gaussian mass of the start beyond the window edge
};

LineIntegral point_to_line_integral(const ContinuumFieldSlice& slice, std::uint32_t t);

/// |sum_z z(s,y; r,z) z(r,z; t,x) dz - z(s,y; t,x)| / z(s,y; t,x), the second factor
/// recomputed backwards from (t, x) with the slice's own scheme.
double chapman_kolmogorov_residual(const ContinuumFieldSlice& slice, std::uint32_t r, std::uint32_t t,
                                   std::int64_t x);

/// Euler noise multipliers exp(theta xi - lambda) for every site of row i.
void euler_multipliers(const Environment& env, double theta, std::uint32_t i, double* out);

/// Normalised discrete Gaussian heat step used by the Euler scheme (taps for |k| <= 10).
const std::vector<double>& euler_heat_taps();

}  // namespace cdrp
