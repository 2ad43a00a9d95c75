#include "doctest.h"

#include <cmath>
#include <memory>

#include "cdrp/cdrp_measure.hpp"
#include "cdrp/diagnostics.hpp"
#include "cdrp/errors.hpp"

using namespace cdrp;

namespace {

DyadicPath make_path(int level, double T, double (*f)(double)) {
  DyadicPath p;
  p.level = level;
  p.horizon = T;
  const std::size_t N = std::size_t{1} << level;
  for (std::size_t k = 0; k <= N; ++k) {
    p.times.push_back(T * k / N);
    p.positions.push_back(f(p.times.back()));
    p.sites.push_back(0);
  }
  return p;
}

std::shared_ptr<const Environment> env_for(const LatticeSpec& spec, std::uint64_t seed) {
  return std::make_shared<const Environment>(
      Environment::generate(spec, {seed, 0, StreamPurpose::environment}, Disorder::gaussian));
}

}  // namespace

TEST_CASE("summaries") {
  const Estimate e = summarize({1.0, 2.0, 3.0, 4.0});
  CHECK(e.mean == 2.5);
  CHECK(e.variance == doctest::Approx(5.0 / 3.0));
  CHECK(e.stderr_ == doctest::Approx(std::sqrt(5.0 / 12.0)));
  CHECK(summarize({}).count == 0);
  CHECK(summarize({7.0}).variance == 0.0);
}

TEST_CASE("quadratic variation") {
  const DyadicPath line = make_path(10, 1.0, [](double t) { return 3.0 * t; });
  CHECK(quadratic_variation(line, 1.0) == doctest::Approx(9.0 / 1024.0).epsilon(1e-12));
  // Additivity over the two halves.
  const DyadicPath wig = make_path(8, 2.0, [](double t) { return std::sin(40.0 * t); });
  double second = 0.0;
  for (std::size_t k = 129; k <= 256; ++k) second += std::pow(wig.positions[k] - wig.positions[k - 1], 2);
  CHECK(quadratic_variation(wig, 1.0) + second == doctest::Approx(quadratic_variation(wig, 2.0)).epsilon(1e-14));
  CHECK_THROWS_AS(quadratic_variation(wig, 3.0), DomainError);
}

TEST_CASE("Hoelder exponent of smooth and Brownian paths") {
  std::vector<DyadicPath> lines;
  for (int k = 0; k < 100; ++k) lines.push_back(make_path(10, 1.0, [](double t) { return 2.0 * t; }));
  const HolderEstimate h = holder_exponent_estimate(lines);
  CHECK(h.exponent == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::fabs(h.log_log_coefficient) < 1e-9);

  // 64 lattice steps per dyadic interval keep the walk from looking smoother than BM.
  const LatticeSpec spec = LatticeSpec::continuum(16384);
  MeasureOptions mo;
  mo.keep_every = 64;
  mo.build_backward = false;
  const PolymerMeasure m(env_for(spec, 1), 0.0, mo);
  std::vector<DyadicPath> bm;
  for (std::uint64_t r = 0; r < 200; ++r) bm.push_back(sample_cdrp_path(m, 8, {1, r, StreamPurpose::path_sampling}));
  const double ex = holder_exponent_estimate(bm).exponent;
  CHECK(ex > 0.4);
  CHECK(ex < 0.6);

  CHECK_THROWS_AS(holder_exponent_estimate(std::vector<DyadicPath>(5, lines.front())), DiagnosticError);
}

TEST_CASE("GRR functional") {
  // |X_t - X_s| = |t - s| gives int int |t - s|^gamma = 2 / ((gamma + 1)(gamma + 2)).
  const DyadicPath line = make_path(9, 1.0, [](double t) { return t; });
  for (double gamma : {1.0, 2.0})
    CHECK(grr_functional(line, gamma) == doctest::Approx(2.0 / ((gamma + 1.0) * (gamma + 2.0))).epsilon(1e-4));
  CHECK(grr_functional(make_path(4, 1.0, [](double) { return 0.0; }), 1.0) == 0.0);
  CHECK_THROWS_AS(grr_functional(line, 0.0), DomainError);
}

TEST_CASE("martingale at zero coupling is identically one") {
  const LatticeSpec spec = LatticeSpec::continuum(64);
  const auto env = env_for(spec, 2);
  MeasureOptions mo;
  mo.keep_every = 1;
  const PolymerMeasure brownian(env, 0.0, mo);
  const DyadicPath p = sample_cdrp_path(brownian, 5, {2, 0, StreamPurpose::path_sampling});
  const MartingaleTrace tr = martingale_trace(env, p, 5, 0.0);
  for (double lm : tr.log_m) CHECK(std::fabs(lm) < 1e-13);
  CHECK(std::fabs(martingale_mn(env, p, 3, 0.0) - 1.0) < 1e-13);
}

TEST_CASE("martingale trace is consistent across levels") {
  const LatticeSpec spec = LatticeSpec::continuum(64);
  const auto env = env_for(spec, 3);
  const PolymerMeasure brownian(env, 0.0);
  const DyadicPath p = sample_cdrp_path(brownian, 4, {3, 1, StreamPurpose::path_sampling});
  const MartingaleTrace tr = martingale_trace(env, p, 4, 1.0);
  for (int n = 0; n <= 4; ++n) {
    CHECK(tr.factors[static_cast<std::size_t>(n)].size() == (std::size_t{1} << n));
    CHECK(tr.log_m[static_cast<std::size_t>(n)] == doctest::Approx(log_martingale_mn(env, p, n, 1.0)).epsilon(1e-14));
  }
  // Level 0 is z(0,0; T,X(T)) / rho on the lattice.
  const PolymerMeasure pol(env, 1.0);
  const double want = pol.log_point_to_point(0, 0, 64, p.sites.back()) - brownian.log_point_to_point(0, 0, 64, p.sites.back());
  CHECK(tr.log_m[0] == doctest::Approx(want).epsilon(1e-12));
  CHECK_THROWS_AS(martingale_trace(env, p, 5, 1.0), DomainError);
}

TEST_CASE("averaged functionals") {
  CHECK(parse_functional("endpoint_square") == FddFunctional::endpoint_square);
  CHECK(to_string(FddFunctional::halftime_sign) == "halftime_sign");
  CHECK_THROWS_AS(parse_functional("x"), ConfigError);
  const FddSample s{2.0, 0.0, -1.5};
  CHECK(weighted_functional(FddFunctional::const_one, s) == 2.0);
  CHECK(weighted_functional(FddFunctional::endpoint_square, s) == 4.5);
  CHECK(weighted_functional(FddFunctional::halftime_sign, s) == 1.0);

  AveragedFddSetup setup;
  setup.spec = LatticeSpec::continuum(64);
  const Estimate e = averaged_fdd_check(FddFunctional::const_one, 0.0, 50, setup);
  CHECK(e.mean == doctest::Approx(1.0).epsilon(1e-6));
}
