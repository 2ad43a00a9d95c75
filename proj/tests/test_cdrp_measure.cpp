#include "doctest.h"

#include <cmath>
#include <map>
#include <memory>

#include <boost/math/special_functions/gamma.hpp>

#include "cdrp/cdrp_measure.hpp"
#include "cdrp/errors.hpp"
#include "cdrp/kernels.hpp"

using namespace cdrp;

namespace {

std::shared_ptr<const Environment> env_for(const LatticeSpec& spec, std::uint64_t seed) {
  return std::make_shared<const Environment>(
      Environment::generate(spec, {seed, 0, StreamPurpose::environment}, Disorder::gaussian));
}

}  // namespace

TEST_CASE("free measure at zero coupling has heat-kernel marginals") {
  const LatticeSpec spec = LatticeSpec::continuum(256);
  const PolymerMeasure m(env_for(spec, 1), 0.0);
  CHECK(m.log_normalizer() == doctest::Approx(0.0).epsilon(1e-8));
  for (double x : {0.0, 0.3, -0.7})
    CHECK(continuum_fdd_density(m, {0.5}, {x}) == doctest::Approx(heat_kernel(0.5, x)).epsilon(0.01));
  const double two = continuum_fdd_density(m, {0.25, 0.75}, {0.1, -0.2});
  CHECK(two == doctest::Approx(heat_kernel(0.25, 0.1) * heat_kernel(0.5, -0.3)).epsilon(0.02));
  CHECK(markov_transition_density(m, 0.25, 0.1, 0.75, -0.2) == doctest::Approx(heat_kernel(0.5, -0.3)).epsilon(0.02));
}

TEST_CASE("transition densities integrate to one") {
  const LatticeSpec spec = LatticeSpec::continuum(128);
  const PolymerMeasure m(env_for(spec, 3), 1.5);
  const std::uint32_t j = 96;
  double mass = 0.0;
  for (std::int64_t s = -spec.half_sites(); s <= spec.half_sites(); ++s)
    if (((s + j) & 1) == 0) mass += markov_transition_density(m, 0.25, 0.0, spec.time(j), spec.position(s));
  CHECK(mass * 2.0 * spec.dx() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("sampled paths live on the lattice and are reproducible") {
  const LatticeSpec spec = LatticeSpec::continuum(256);
  const PolymerMeasure m(env_for(spec, 5), 1.0);
  const DyadicPath a = sample_cdrp_path(m, 6, {5, 0, StreamPurpose::path_sampling});
  const DyadicPath b = sample_cdrp_path(m, 6, {5, 0, StreamPurpose::path_sampling});
  const DyadicPath c = sample_cdrp_path(m, 6, {5, 1, StreamPurpose::path_sampling});
  REQUIRE(a.positions.size() == 65);
  CHECK(a.positions == b.positions);
  CHECK(a.positions != c.positions);
  CHECK(a.sites.front() == 0);
  for (std::size_t k = 1; k < a.sites.size(); ++k) {
    CHECK(std::llabs(a.sites[k] - a.sites[k - 1]) <= 4);
    CHECK(((a.sites[k] + 4 * static_cast<std::int64_t>(k)) & 1) == 0);
    CHECK(a.times[k] == doctest::Approx(k / 64.0));
  }
  CHECK_THROWS_AS(sample_cdrp_path(m, 9, {5, 0, StreamPurpose::path_sampling}), DomainError);
}

TEST_CASE("pinned paths end at the pin") {
  const LatticeSpec spec = LatticeSpec::continuum(256);
  MeasureOptions mo;
  mo.mode = EndpointMode::pinned;
  mo.pin_x = 0.4;
  const PolymerMeasure m(env_for(spec, 7), 1.0, mo);
  CHECK(m.pin_site() == 6);
  for (std::uint64_t r = 0; r < 5; ++r) {
    const DyadicPath p = sample_point_to_point_path(m, 5, {7, r, StreamPurpose::path_sampling});
    CHECK(p.sites.back() == 6);
  }
  const PolymerMeasure free(env_for(spec, 7), 1.0);
  CHECK_THROWS_AS(sample_point_to_point_path(free, 5, {7, 0}), ConfigError);
}

TEST_CASE("dyadic sampler matches the lattice polymer law") {
  // At level 3 on an 8-step grid every step is observed, so the sampler must reproduce
  // the discrete Gibbs measure with the transfer-matrix coupling.
  const LatticeSpec spec = LatticeSpec::continuum(8);
  const auto env = env_for(spec, 9);
  const PolymerMeasure m(env, 2.0);
  const DiscretePathLaw law(env, lattice_coupling(2.0, spec), 8);
  std::map<std::pair<std::int64_t, std::int64_t>, double> counts;
  const std::size_t draws = 20000;
  for (std::size_t k = 0; k < draws; ++k) {
    const DyadicPath p = sample_cdrp_path(m, 3, {9, k, StreamPurpose::path_sampling});
    counts[{p.sites[4], p.sites[8]}] += 1.0;
  }
  double chi2 = 0.0;
  int cells = 0;
  for (std::int64_t x = -4; x <= 4; x += 2)
    for (std::int64_t y = x - 4; y <= x + 4; y += 2) {
      const double expect = draws * discrete_fdd(law, {4, 8}, {x, y});
      const double got = counts.count({x, y}) ? counts[{x, y}] : 0.0;
      chi2 += (got - expect) * (got - expect) / expect;
      ++cells;
    }
  CHECK(boost::math::gamma_q(0.5 * (cells - 1), 0.5 * chi2) > 1e-3);
}

TEST_CASE("length rescaling") {
  const LatticeSpec spec = LatticeSpec::continuum(256, 4.0);
  const auto env = env_for(spec, 2);
  const PolymerMeasure m(env, 1.0);
  const DyadicPath p = sample_cdrp_path(m, 4, {2, 0, StreamPurpose::path_sampling});
  const RescaledPath r = rescale_length(p, *env, 1.0);
  CHECK(r.effective_beta == std::sqrt(2.0));
  CHECK(r.path.horizon == 1.0);
  CHECK(r.path.times.back() == 1.0);
  for (std::size_t k = 0; k < p.positions.size(); ++k)
    CHECK(r.path.positions[k] == doctest::Approx(p.positions[k] / 2.0).epsilon(1e-15));
  // The rescaled problem has the same lattice weights.
  const LatticeSpec& u = r.environment.spec();
  CHECK(lattice_coupling(r.effective_beta, u) == doctest::Approx(lattice_coupling(1.0, spec)).epsilon(1e-15));
  CHECK(r.environment.value(17, 3) == env->value(17, 3));
}

TEST_CASE("measure errors") {
  const LatticeSpec spec = LatticeSpec::continuum(64);
  CHECK_THROWS_AS(PolymerMeasure(nullptr, 1.0), ConfigError);
  const PolymerMeasure m(env_for(spec, 1), 1.0);
  CHECK_THROWS_AS(continuum_fdd_density(m, {0.0}, {0.0}), DomainError);
  CHECK_THROWS_AS(continuum_fdd_density(m, {0.5, 0.25}, {0.0, 0.0}), DomainError);
  CHECK_THROWS_AS(m.time_step(2.0), DomainError);
  CHECK_THROWS_AS(markov_transition_density(m, 0.5, 0.0, 0.5, 0.0), DomainError);
}
