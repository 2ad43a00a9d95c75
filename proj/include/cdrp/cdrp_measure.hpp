#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "cdrp/discrete_polymer.hpp"
#include "cdrp/env_noise.hpp"
#include "cdrp/she_field.hpp"

namespace cdrp {

enum class EndpointMode { free, pinned };

struct MeasureOptions {
  EndpointMode mode = EndpointMode::free;
  double pin_x = 0.0;
  std::uint32_t keep_every = 1;  // forward rows retained; sampling needs every dyadic time
  bool build_backward = true;    // needed for densities, not for sampling
  bool cache_weights = true;
};

/// A polymer path observed at t_k = k 2^-level T. Positions are lattice sites times dx.
struct DyadicPath {
  int level = 0;
  double horizon = 1.0;
  std::vector<double> times;
  std::vector<double> positions;
  std::vector<std::int64_t> sites;
  SeedSpec seed;
};

/// Quenched law of the continuum polymer on [0, T] started at the origin, free or pinned
/// at the terminal time.
class PolymerMeasure {
 public:
  PolymerMeasure(std::shared_ptr<const Environment> env, double beta, MeasureOptions opts = {});

  /// Reuse a transfer-matrix slice started at the origin (for example one read from a
  /// snapshot). The environment must be the one the slice was built from.
  PolymerMeasure(ContinuumFieldSlice forward, std::shared_ptr<const Environment> env, MeasureOptions opts = {});

  double beta() const { return forward_.beta; }
  const LatticeSpec& spec() const { return forward_.spec; }
  EndpointMode mode() const { return opts_.mode; }
  std::int64_t pin_site() const { return pin_site_; }
  const ContinuumFieldSlice& forward() const { return forward_; }
  const WeightField& weights() const { return *weights_; }

  /// log z(0,0; T,*) in free mode, log z(0,0; T,x) when pinned at x.
  double log_normalizer() const { return log_normalizer_; }

  /// Grid step nearest to physical time t.
  std::uint32_t time_step(double t) const;

  /// log of z(t,s; T,*) (free) or z(t,s; T,x_pin) (pinned) on the lattice.
  double log_terminal(std::uint32_t t, std::int64_t s) const;

  /// log z(i,a; j,b) on the lattice, density normalised.
  double log_point_to_point(std::uint32_t i, std::int64_t a, std::uint32_t j, std::int64_t b) const;

 private:
  void init();

  MeasureOptions opts_;
  ContinuumFieldSlice forward_;
  std::shared_ptr<WeightField> weights_;
  std::int64_t pin_site_ = 0;
  double log_normalizer_ = 0.0;
  std::optional<PointToLineField> to_line_;     // free mode
  std::optional<PointToPointField> to_point_;   // pinned mode
};

/// Density of (X(t_1), ..., X(t_k)) at (x_1, ..., x_k). Times snap to the grid, positions are
/// interpolated multilinearly in log between neighbouring lattice sites.
double continuum_fdd_density(const PolymerMeasure& m, const std::vector<double>& times,
                             const std::vector<double>& positions);

/// Transition density z(s,y; t,x) z(t,x; T,.) / z(s,y; T,.).
double markov_transition_density(const PolymerMeasure& m, double s, double y, double t, double x);

/// Path on the dyadic mesh of the given level. Sampling runs backwards from the terminal
/// point, drawing each X(t_{k-1}) from z(0,0; t_{k-1},y) z(t_{k-1},y; t_k,X(t_k)) by
/// inverse CDF with one uniform per step.
DyadicPath sample_cdrp_path(const PolymerMeasure& m, int level, SeedSpec seed);

/// Same sampler; requires a measure pinned at its terminal point.
DyadicPath sample_point_to_point_path(const PolymerMeasure& m, int level, SeedSpec seed);

struct RescaledPath {
  DyadicPath path;
  double effective_beta = 0.0;
  Environment environment;  // same cells on the unit-horizon grid
};

/// X_*(t) = T^{-1/2} X(tT) with coupling beta T^{1/4}. The lattice weights of the unit
/// horizon problem coincide with the original ones, so the map is exact on the grid.
RescaledPath rescale_length(const DyadicPath& path, const Environment& env, double beta);

}  // namespace cdrp
