#include "doctest.h"

#include <cmath>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "cdrp/env_noise.hpp"
#include "cdrp/errors.hpp"
#include "cdrp/philox.hpp"
#include "cdrp/simd/dispatch.hpp"

using namespace cdrp;

// Known-answer vectors published with the Random123 reference implementation.
TEST_CASE("philox4x32-10 known answers") {
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == PhiloxCounter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        PhiloxCounter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        PhiloxCounter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("open uniforms never hit the end points") {
  CHECK(bits_to_open_uniform(0) == 0x1.0p-53);
  CHECK(bits_to_open_uniform(~std::uint64_t{0}) == 1.0 - 0x1.0p-53);
  CHECK(bits_to_open_uniform(std::uint64_t{1} << 63) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("seed keys separate replicas and purposes") {
  const PhiloxKey a = SeedSpec{1, 0, StreamPurpose::environment}.key();
  const PhiloxKey b = SeedSpec{1, 1, StreamPurpose::environment}.key();
  const PhiloxKey c = SeedSpec{1, 0, StreamPurpose::path_sampling}.key();
  const PhiloxKey d = SeedSpec{2, 0, StreamPurpose::environment}.key();
  auto same = [](PhiloxKey x, PhiloxKey y) { return x.k0 == y.k0 && x.k1 == y.k1; };
  CHECK_FALSE(same(a, b));
  CHECK_FALSE(same(a, c));
  CHECK_FALSE(same(a, d));
  CHECK(same(a, SeedSpec{1, 0, StreamPurpose::environment}.key()));
}

TEST_CASE("inverse normal agrees with Boost quantiles") {
  const boost::math::normal_distribution<double> n01;
  const auto& kt = simd::scalar_kernels();
  double worst = 0.0;
  for (int k = 1; k < 2000; ++k) {
    // Spread the probes over the central branch and both tails.
    const double u = k < 1000 ? std::ldexp(1.0, -k / 20 - 1) * (1.0 + (k % 20) / 20.0) : k / 2000.0;
    const std::uint64_t bits = static_cast<std::uint64_t>(std::ldexp(u, 52)) << 12;
    double z;
    kt.normal_from_bits(&bits, 1, &z);
    const double want = boost::math::quantile(n01, bits_to_open_uniform(bits));
    worst = std::max(worst, std::fabs(z - want) / std::max(1.0, std::fabs(want)));
  }
  CHECK(worst < 1e-14);
}

TEST_CASE("lattice specs") {
  const LatticeSpec d = LatticeSpec::discrete(16);
  CHECK(d.dt() == 1.0);
  CHECK(d.half_sites() == 24);
  const LatticeSpec c = LatticeSpec::continuum(256);
  CHECK(c.dx() == doctest::Approx(1.0 / 16));
  CHECK(c.half_sites() == 96);
  CHECK_NOTHROW(c.validate());
  CHECK_THROWS_AS((LatticeSpec{256, 1.0, 5.0}.validate()), ConfigError);
  CHECK_THROWS_AS((LatticeSpec{0, 1.0, 6.0}.validate()), ConfigError);
  CHECK(LatticeSpec::continuum(64, 4.0).space_halfwidth_L == 12.0);
}

TEST_CASE("lazy and materialised environments hold the same cells") {
  const LatticeSpec spec = LatticeSpec::continuum(64);
  const SeedSpec seed{9, 3, StreamPurpose::environment};
  for (Disorder dist : {Disorder::gaussian, Disorder::rademacher}) {
    const Environment full = Environment::generate(spec, seed, dist);
    GenerateOptions lazy;
    lazy.memory_budget_bytes = 0;
    const Environment cold = Environment::generate(spec, seed, dist, lazy);
    REQUIRE(full.materialized());
    REQUIRE_FALSE(cold.materialized());
    const std::int64_t M = spec.half_sites();
    std::vector<double> a(static_cast<std::size_t>(M + 1)), b(a.size());
    for (std::uint32_t i = 1; i <= spec.n_time; ++i) {
      full.fill_row(i, -M, a.size(), 2, a.data());
      cold.fill_row(i, -M, b.size(), 2, b.data());
      CHECK(a == b);
      CHECK(full.value(i, 1 - static_cast<std::int64_t>(i % 3)) == cold.value(i, 1 - static_cast<std::int64_t>(i % 3)));
    }
  }
}

TEST_CASE("environment rejects out-of-range cells and budgets") {
  const LatticeSpec spec = LatticeSpec::continuum(16);
  const Environment env = Environment::generate(spec, {1, 0}, Disorder::gaussian);
  CHECK_THROWS_AS(env.value(0, 0), DomainError);
  CHECK_THROWS_AS(env.value(1, spec.half_sites() + 1), DomainError);
  GenerateOptions strict;
  strict.memory_budget_bytes = 16;
  strict.allow_lazy = false;
  CHECK_THROWS_AS(Environment::generate(spec, {1, 0}, Disorder::gaussian, strict), CapacityError);
  CHECK_THROWS_AS(Environment::from_values(spec, Disorder::gaussian, {1.0, 2.0}), ConfigError);
}

TEST_CASE("disorder moments") {
  const LatticeSpec spec = LatticeSpec::continuum(256);
  for (Disorder dist : {Disorder::gaussian, Disorder::rademacher}) {
    const Environment env = Environment::generate(spec, {5, 0}, dist);
    double s1 = 0.0, s2 = 0.0, count = 0.0;
    for (std::uint32_t i = 1; i <= spec.n_time; ++i)
      for (std::int64_t s = -spec.half_sites(); s <= spec.half_sites(); ++s) {
        const double v = env.value(i, s);
        s1 += v;
        s2 += v * v;
        count += 1.0;
      }
    // About 5e4 cells: 5 standard errors of the mean and of the second moment.
    CHECK(std::fabs(s1 / count) < 5.0 / std::sqrt(count));
    CHECK(std::fabs(s2 / count - 1.0) < 5.0 * std::sqrt(2.0 / count));
  }
  CHECK(log_mgf(Disorder::gaussian, 0.3) == doctest::Approx(0.045));
  CHECK(log_mgf(Disorder::rademacher, 0.3) == doctest::Approx(std::log(std::cosh(0.3))).epsilon(1e-15));
  CHECK(parse_disorder("rademacher") == Disorder::rademacher);
  CHECK_THROWS_AS(parse_disorder("cauchy"), ConfigError);
}
