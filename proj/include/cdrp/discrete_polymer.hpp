#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "cdrp/env_noise.hpp"
#include "cdrp/row_store.hpp"

namespace cdrp {

/// Mean-one Boltzmann weights w(i, s) = exp(b * omega(i, s) - log_mgf(b)) for a lattice
/// coupling b. At b = 0 every weight is exactly 1 and the environment is never read.
class WeightField {
 public:
  WeightField(std::shared_ptr<const Environment> env, double coupling);

  /// Precompute the weights on sites s = i + parity (mod 2) for every row.
  void cache(int parity);

  double coupling() const { return coupling_; }
  bool unit() const { return coupling_ == 0.0; }
  const Environment& env() const { return *env_; }
  const std::shared_ptr<const Environment>& env_ptr() const { return env_; }
  const LatticeSpec& spec() const { return env_->spec(); }

  /// out[k] = w(i, first + 2k).
  void fill(std::uint32_t i, std::int64_t first, std::size_t count, double* out) const;
  /// out[k] = log w(i, first + 2k), computed without exponentiating.
  void fill_log(std::uint32_t i, std::int64_t first, std::size_t count, double* out) const;
  double at(std::uint32_t i, std::int64_t site) const;

 private:
  std::shared_ptr<const Environment> env_;
  double coupling_;
  double shift_;
  int cached_parity_ = -1;
  std::vector<double> cache_;  // row i - 1, parity sites from the left window edge
};

struct RecursionOptions {
  Accumulation accumulation = Accumulation::automatic;
  std::uint32_t keep_every = 1;  // retain rows whose offset from the first row is a multiple
};

/// Rows of a lattice recursion, indexed by absolute time step.
class RowSeries {
 public:
  RowSeries() = default;
  RowSeries(std::uint32_t first_time, std::uint32_t last_time, std::uint32_t keep_every);

  std::uint32_t first_time() const { return first_time_; }
  std::uint32_t last_time() const { return last_time_; }
  bool stores(std::uint32_t t) const;
  const ParityRow& row(std::uint32_t t) const;
  ParityRow& slot(std::uint32_t t);
  /// True once the recursion that filled the series ran on per-site logs.
  bool log_domain() const { return log_domain_; }
  void mark_log_domain() { log_domain_ = true; }

  double value(std::uint32_t t, std::int64_t site) const { return row(t).value(site); }
  double log_value(std::uint32_t t, std::int64_t site) const { return row(t).log_value(site); }

 private:
  std::size_t index(std::uint32_t t) const;

  std::uint32_t first_time_ = 0, last_time_ = 0, keep_every_ = 1;
  std::vector<ParityRow> rows_;
  bool log_domain_ = false;
};

/// Z(i, x; j, y) for a fixed start (i, x) and all j in [i, end_time].
struct PointToPointField {
  std::uint32_t start_time = 0;
  std::int64_t start_site = 0;
  RowSeries rows;
};

/// Z(i, x; n, *) for i = 0..n on every window site with s = i + parity (mod 2).
struct PointToLineField {
  std::uint32_t horizon = 0;
  int parity = 0;
  RowSeries rows;
};

/// Forward evolution Z(i,x; j+1,y) = 1/2 w(j+1,y) [Z(i,x; j,y-1) + Z(i,x; j,y+1)].
PointToPointField forward_partition(const WeightField& w, std::uint32_t start_time, std::int64_t start_site,
                                    std::uint32_t end_time, RecursionOptions opts = {});

/// Backward equation Z(i,x; n,*) = 1/2 sum_{+-} w(i+1,x+-1) Z(i+1,x+-1; n,*), Z(n,x; n,*) = 1.
/// With `origin_cone` row i only covers |x| <= i, the sites a walk from (0, 0) can visit.
/// Each row shares one scale, so the narrower rows keep the origin's value from
/// underflowing against distant sites under strong disorder.
PointToLineField backward_partition(const WeightField& w, std::uint32_t horizon, int parity = 0,
                                    RecursionOptions opts = {}, bool origin_cone = false);

/// Rows t = 0..end_time of Z(t, y; end_time, end_site), stored in `start_*` as the end point.
PointToPointField backward_point_to_point_field(const WeightField& w, std::uint32_t end_time,
                                                std::int64_t end_site, RecursionOptions opts = {});

/// Z(from_time, y; end_time, end_site) for every y, as a single row.
ParityRow backward_point_to_point(const WeightField& w, std::uint32_t from_time, std::uint32_t end_time,
                                  std::int64_t end_site, Accumulation mode = Accumulation::automatic);

struct StepProbabilities {
  double p_up = 0.5;
  double p_down = 0.5;
  double raw_sum = 1.0;  // p_up + p_down before the complement is enforced
};

/// Quenched polymer law of horizon n started at the origin.
class DiscretePathLaw {
 public:
  DiscretePathLaw(std::shared_ptr<const Environment> env, double beta, std::uint32_t horizon,
                  RecursionOptions opts = {});

  std::uint32_t horizon() const { return horizon_; }
  double beta() const { return weights_.coupling(); }
  const WeightField& weights() const { return weights_; }
  const PointToLineField& point_to_line() const { return backward_; }
  double log_partition() const { return backward_.rows.log_value(0, 0); }

  StepProbabilities transition_probabilities(std::uint32_t i, std::int64_t x) const;

 private:
  WeightField weights_;
  std::uint32_t horizon_;
  PointToLineField backward_;
};

/// S_0..S_n drawn from the quenched Gibbs measure, one uniform per step.
std::vector<std::int64_t> sample_discrete_path(const DiscretePathLaw& law, SeedSpec seed);

/// P(S_{i_1} = x_1, ..., S_{i_k} = x_k) under the quenched law. Zero on parity violations.
double discrete_fdd(const DiscretePathLaw& law, const std::vector<std::uint32_t>& times,
                    const std::vector<std::int64_t>& positions);

}  // namespace cdrp
