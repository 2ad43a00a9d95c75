#include "cdrp/env_noise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cdrp/errors.hpp"
#include "cdrp/parallel.hpp"
#include "cdrp/simd/dispatch.hpp"

namespace cdrp {

double LatticeSpec::dx() const { return std::sqrt(dt()); }

std::int64_t LatticeSpec::half_sites() const {
  // Guard against L/dx landing a hair above an integer after rescaling.
  return static_cast<std::int64_t>(std::ceil(space_halfwidth_L / dx() * (1.0 - 1e-12)));
}

void LatticeSpec::validate() const {
  if (n_time == 0) throw ConfigError("n_time must be positive");
  if (!(horizon_T > 0.0) || !std::isfinite(horizon_T)) throw ConfigError("horizon T must be positive");
  if (!(space_halfwidth_L >= 6.0 * std::sqrt(horizon_T) * (1.0 - 1e-12)))
    throw ConfigError("space half-width L must be at least 6*sqrt(T)");
}

LatticeSpec LatticeSpec::discrete(std::uint32_t n) {
  const double n_d = static_cast<double>(n);
  return {n, n_d, std::max(n_d, std::ceil(6.0 * std::sqrt(n_d)))};
}

LatticeSpec LatticeSpec::continuum(std::uint32_t n, double T) { return {n, T, 6.0 * std::sqrt(T)}; }

Disorder parse_disorder(std::string_view tag) {
  if (tag == "gaussian") return Disorder::gaussian;
  if (tag == "rademacher") return Disorder::rademacher;
  throw ConfigError("unknown disorder distribution '" + std::string(tag) + "'");
}

std::string_view to_string(Disorder d) { return d == Disorder::gaussian ? "gaussian" : "rademacher"; }

double log_mgf(Disorder d, double beta) {
  if (d == Disorder::gaussian) return 0.5 * beta * beta;
  const double a = std::fabs(beta);
  return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);  // log cosh
}

PhiloxKey SeedSpec::key() const {
  std::uint64_t h = splitmix64(master_seed);
  h = splitmix64(h ^ replica_index);
  h = splitmix64(h ^ (0x5851F42D4C957F2Dull * (static_cast<std::uint64_t>(purpose) + 1)));
  return {static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
}

namespace {

void bits_to_disorder(Disorder dist, const std::uint64_t* bits, std::size_t n, double* out) {
  if (dist == Disorder::gaussian) {
    simd::active_kernels().normal_from_bits(bits, n, out);
  } else {
    for (std::size_t k = 0; k < n; ++k) out[k] = (bits[k] >> 63) ? 1.0 : -1.0;
  }
}

}  // namespace

Environment Environment::generate(const LatticeSpec& spec, SeedSpec seed, Disorder dist, GenerateOptions opts) {
  spec.validate();
  Environment env;
  env.spec_ = spec;
  env.seed_ = seed;
  env.dist_ = dist;

  const std::size_t width = spec.n_sites();
  const std::size_t rows = spec.n_time;
  const bool overflow = width > std::numeric_limits<std::size_t>::max() / sizeof(double) / rows;
  if (overflow || (width * rows > (std::uint64_t{1} << 62)))
    throw CapacityError("environment cell count overflows the counter space");
  const std::size_t bytes = width * rows * sizeof(double);
  if (bytes > opts.memory_budget_bytes) {
    if (!opts.allow_lazy)
      throw CapacityError("environment needs " + std::to_string(bytes >> 20) + " MiB, budget is " +
                          std::to_string(opts.memory_budget_bytes >> 20) +
                          " MiB; raise the budget or allow lazy generation");
    return env;
  }

  auto values = std::make_shared<std::vector<double>>(width * rows);
  const PhiloxKey key = seed.key();
  const auto& kt = simd::active_kernels();
  parallel_for(rows, [&](std::size_t b, std::size_t e) {
    std::vector<std::uint64_t> bits(width);
    for (std::size_t r = b; r < e; ++r) {
      kt.philox_bits(key, 0, r * width, 1, width, bits.data());
      bits_to_disorder(dist, bits.data(), width, values->data() + r * width);
    }
  });
  env.values_ = std::move(values);
  return env;
}

Environment Environment::from_values(const LatticeSpec& spec, Disorder dist, std::vector<double> values) {
  if (values.size() != static_cast<std::size_t>(spec.n_time) * spec.n_sites())
    throw ConfigError("environment value count does not match the lattice");
  Environment env;
  env.spec_ = spec;
  env.dist_ = dist;
  env.values_ = std::make_shared<const std::vector<double>>(std::move(values));
  return env;
}

double Environment::generate_cell(std::uint32_t i, std::int64_t site) const {
  const std::uint64_t counter =
      static_cast<std::uint64_t>(i - 1) * spec_.n_sites() + static_cast<std::uint64_t>(site + spec_.half_sites());
  const std::uint64_t bits = philox_bits(counter, 0, seed_.key());
  double v;
  bits_to_disorder(dist_, &bits, 1, &v);
  return v;
}

double Environment::value(std::uint32_t i, std::int64_t site) const {
  if (i < 1 || i > spec_.n_time || site < -spec_.half_sites() || site > spec_.half_sites())
    throw DomainError("environment cell out of range");
  if (values_) return (*values_)[(i - 1) * spec_.n_sites() + static_cast<std::size_t>(site + spec_.half_sites())];
  return generate_cell(i, site);
}

void Environment::fill_row(std::uint32_t i, std::int64_t first_site, std::size_t count, std::int64_t site_stride,
                           double* out) const {
  if (count == 0) return;
  const std::int64_t M = spec_.half_sites();
  const std::int64_t last = first_site + static_cast<std::int64_t>(count - 1) * site_stride;
  if (i < 1 || i > spec_.n_time || std::min(first_site, last) < -M || std::max(first_site, last) > M)
    throw DomainError("environment row range out of bounds");
  const std::uint64_t base = static_cast<std::uint64_t>(i - 1) * spec_.n_sites();
  if (values_) {
    const double* row = values_->data() + base + static_cast<std::size_t>(M);
    for (std::size_t k = 0; k < count; ++k) out[k] = row[first_site + static_cast<std::int64_t>(k) * site_stride];
    return;
  }
  thread_local std::vector<std::uint64_t> bits;
  bits.resize(count);
  simd::active_kernels().philox_bits(seed_.key(), 0, base + static_cast<std::uint64_t>(first_site + M),
                                     static_cast<std::uint64_t>(site_stride), count, bits.data());
  bits_to_disorder(dist_, bits.data(), count, out);
}

Environment Environment::with_spec(const LatticeSpec& spec) const {
  if (spec.n_time != spec_.n_time || spec.n_sites() != spec_.n_sites())
    throw DomainError("rescaled lattice must keep the cell layout");
  Environment env = *this;
  env.spec_ = spec;
  return env;
}

}  // namespace cdrp
