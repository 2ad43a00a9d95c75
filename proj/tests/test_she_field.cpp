#include "doctest.h"

#include <cmath>
#include <memory>
#include <numeric>

#include "cdrp/errors.hpp"
#include "cdrp/kernels.hpp"
#include "cdrp/she_field.hpp"

using namespace cdrp;

namespace {

std::shared_ptr<const Environment> env_for(const LatticeSpec& spec, std::uint64_t seed) {
  return std::make_shared<const Environment>(
      Environment::generate(spec, {seed, 0, StreamPurpose::environment}, Disorder::gaussian));
}

double walk_mass(std::uint32_t n, std::int64_t s) {
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(0.5 * static_cast<double>(n + s) + 1.0) -
                  std::lgamma(0.5 * static_cast<double>(n - s) + 1.0) - n * std::log(2.0));
}

}  // namespace

TEST_CASE("couplings") {
  const LatticeSpec spec = LatticeSpec::continuum(256);
  CHECK(lattice_coupling(1.0, spec) == doctest::Approx(0.25 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(euler_coupling(2.0, spec) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(parse_scheme("euler") == Scheme::euler);
  CHECK(to_string(Scheme::transfer_matrix) == "tm");
  CHECK(parse_scheme("transfer_matrix") == Scheme::transfer_matrix);
  CHECK_THROWS_AS(parse_scheme("rk4"), ConfigError);
}

TEST_CASE("zero-coupling transfer matrix is the walk kernel in density units") {
  const LatticeSpec spec = LatticeSpec::continuum(64);
  const auto slice = build_field_transfer_matrix(env_for(spec, 1), 0.0);
  const double cell = 2.0 * spec.dx();
  for (std::int64_t s = -20; s <= 20; s += 2) CHECK(slice.density(64, s) * cell == doctest::Approx(walk_mass(64, s)).epsilon(1e-13));
  CHECK(slice.density(64, 1) == 0.0);
  // The window clips Gaussian tails of order 1e-9.
  CHECK(point_to_line_integral(slice, 64).value == doctest::Approx(1.0).epsilon(1e-8));
  // Local CLT: the density at the origin approaches the heat kernel.
  CHECK(slice.density(64, 0) == doctest::Approx(heat_kernel(1.0, 0.0)).epsilon(5e-3));
}

TEST_CASE("zero-coupling Euler field conserves mass and spreads like the heat kernel") {
  const LatticeSpec spec = LatticeSpec::continuum(256);
  const auto slice = build_field_euler_mild(env_for(spec, 1), 0.0);
  CHECK(point_to_line_integral(slice, 256).value == doctest::Approx(1.0).epsilon(1e-8));
  const double dx = spec.dx();
  double var = 0.0;
  for (std::int64_t s = -spec.half_sites(); s <= spec.half_sites(); ++s)
    var += slice.density(256, s) * dx * std::pow(spec.position(s), 2);
  CHECK(var == doctest::Approx(1.0).epsilon(0.02));
  double taps = 0.0;
  for (std::size_t k = 0; k < euler_heat_taps().size(); ++k) taps += (k == 0 ? 1.0 : 2.0) * euler_heat_taps()[k];
  CHECK(taps == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("fields are positive and finite") {
  const LatticeSpec spec = LatticeSpec::continuum(256);
  const auto env = env_for(spec, 4);
  for (double beta : {1.0, 3.0}) {
    const auto tm = build_field_transfer_matrix(env, beta);
    const auto eu = build_field_euler_mild(env, beta);
    for (std::int64_t s = -40; s <= 40; s += 2) {
      CHECK(tm.density(256, s) > 0.0);
      CHECK(eu.density(256, s) > 0.0);
    }
    CHECK(std::isfinite(point_to_line_integral(tm, 256).value));
    CHECK(point_to_line_integral(tm, 256).tail_bound < 1e-8);
  }
}

TEST_CASE("continuum Chapman-Kolmogorov in both schemes") {
  const LatticeSpec spec = LatticeSpec::continuum(128);
  const auto env = env_for(spec, 6);
  const auto tm = build_field_transfer_matrix(env, 1.0);
  const auto eu = build_field_euler_mild(env, 1.0);
  for (std::uint32_t r : {1u, 17u, 64u, 127u}) {
    CHECK(chapman_kolmogorov_residual(tm, r, 128, 4) < 1e-12);
    CHECK(chapman_kolmogorov_residual(eu, r, 128, 3) < 1e-10);
  }
  CHECK_THROWS_AS(chapman_kolmogorov_residual(tm, 0, 128, 0), DomainError);
  CHECK_THROWS_AS(chapman_kolmogorov_residual(tm, 128, 128, 0), DomainError);
}

TEST_CASE("shifted starts and partial horizons") {
  const LatticeSpec spec = LatticeSpec::continuum(64);
  const auto env = env_for(spec, 2);
  FieldBuildOptions fo;
  fo.end_time = 40;
  fo.keep_every = 8;
  const auto slice = build_field_transfer_matrix(env, 0.0, 8, 2, fo);
  CHECK(slice.end_time() == 40);
  CHECK(slice.rows.stores(24));
  CHECK_FALSE(slice.rows.stores(25));
  CHECK(slice.density(40, 2) * 2.0 * spec.dx() == doctest::Approx(walk_mass(32, 0)).epsilon(1e-13));
}

TEST_CASE("Euler multipliers are mean one") {
  const LatticeSpec spec = LatticeSpec::continuum(256);
  const auto env = env_for(spec, 3);
  std::vector<double> m(spec.n_sites());
  double sum = 0.0;
  for (std::uint32_t i = 1; i <= 256; ++i) {
    euler_multipliers(*env, 0.25, i, m.data());
    sum += std::accumulate(m.begin(), m.end(), 0.0);
  }
  const double cells = 256.0 * spec.n_sites();
  const double sd = std::sqrt(std::exp(0.0625) - 1.0);
  CHECK(std::fabs(sum / cells - 1.0) < 5.0 * sd / std::sqrt(cells));
}
