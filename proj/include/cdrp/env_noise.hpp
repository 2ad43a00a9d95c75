#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "cdrp/philox.hpp"

namespace cdrp {

/// Discretisation of [0, T] x [-L, L] with dx^2 = dt. Sites are signed integers
/// s in [-M, M], at position s * dx; time steps are i = 0..n_time.
struct LatticeSpec {
  std::uint32_t n_time = 0;
  double horizon_T = 1.0;
  double space_halfwidth_L = 6.0;

  double dt() const { return horizon_T / n_time; }
  double dx() const;
  std::int64_t half_sites() const;  // M
  std::size_t n_sites() const { return static_cast<std::size_t>(2 * half_sites() + 1); }
  double time(std::int64_t i) const { return static_cast<double>(i) * dt(); }
  double position(std::int64_t site) const { return static_cast<double>(site) * dx(); }

  /// Throws ConfigError unless n_time > 0, T > 0 and L >= 6 sqrt(T).
  void validate() const;

  /// Unit-step lattice for the standalone discrete polymer: dt = dx = 1 and a window
  /// the walk cannot reach within n steps.
  static LatticeSpec discrete(std::uint32_t n);
  /// Horizon T on n steps with the minimal admissible window L = 6 sqrt(T).
  static LatticeSpec continuum(std::uint32_t n, double T = 1.0);
};

enum class Disorder { gaussian, rademacher };

Disorder parse_disorder(std::string_view tag);
std::string_view to_string(Disorder d);

/// log E[exp(beta * omega)].
double log_mgf(Disorder d, double beta);

enum class StreamPurpose : std::uint32_t { environment = 0, path_sampling = 1, bootstrap = 2 };

struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t replica_index = 0;
  StreamPurpose purpose = StreamPurpose::environment;

  PhiloxKey key() const;
};

struct GenerateOptions {
  std::size_t memory_budget_bytes = std::size_t{512} << 20;
  bool allow_lazy = true;
};

/// i.i.d. mean-zero, unit-variance disorder omega(i, s) for i = 1..n_time and every
/// lattice site. Cell (i, s) is a pure function of (seed, i, s), so materialised and
/// lazy environments hold the same values.
class Environment {
 public:
  static Environment generate(const LatticeSpec& spec, SeedSpec seed, Disorder dist,
                              GenerateOptions opts = {});
  /// Explicit values, row-major over i = 1..n_time, sites -M..M.
  static Environment from_values(const LatticeSpec& spec, Disorder dist, std::vector<double> values);

  const LatticeSpec& spec() const { return spec_; }
  SeedSpec seed() const { return seed_; }
  Disorder dist() const { return dist_; }
  bool materialized() const { return static_cast<bool>(values_); }

  double value(std::uint32_t i, std::int64_t site) const;

  /// out[k] = omega(i, first_site + k * site_stride), k < count.
  void fill_row(std::uint32_t i, std::int64_t first_site, std::size_t count, std::int64_t site_stride,
                double* out) const;

  /// Same cells read on a different grid (same n_time and site count).
  Environment with_spec(const LatticeSpec& spec) const;

 private:
  double generate_cell(std::uint32_t i, std::int64_t site) const;

  LatticeSpec spec_;
  SeedSpec seed_;
  Disorder dist_ = Disorder::gaussian;
  std::shared_ptr<const std::vector<double>> values_;
};

}  // namespace cdrp
