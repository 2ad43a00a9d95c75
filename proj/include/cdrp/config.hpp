#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cdrp/env_noise.hpp"
#include "cdrp/she_field.hpp"

namespace cdrp {

/// Everything an experiment reads. Optional fields fall back to per-experiment defaults
/// that reproduce the acceptance setup.
struct RunConfig {
  std::string experiment;

  std::optional<std::uint32_t> n_time;
  std::optional<double> horizon_T;
  std::optional<double> space_halfwidth_L;  // default 6 sqrt(T)
  std::optional<double> beta;
  std::uint64_t seed = 1;
  Disorder dist = Disorder::gaussian;
  Scheme scheme = Scheme::transfer_matrix;

  std::optional<std::size_t> replicas;
  std::optional<std::size_t> envs;
  std::optional<std::size_t> paths;
  std::optional<int> level;
  std::optional<double> pin;  // terminal point; empty means free end
  std::optional<double> gamma;
  std::optional<std::string> functional;

  double tol_se = 4.0;       // multiples of the standard error
  double tol_exact = 1e-12;  // relative residual for exact identities
  std::optional<double> tol_rel;

  unsigned threads = 0;  // 0 = hardware default
  std::size_t memory_budget_mb = 512;
  std::string out_dir = ".";
  std::string snapshot_in;
  std::string snapshot_out;

  /// Lattice from n_time, horizon_T and space_halfwidth_L with the given defaults.
  LatticeSpec lattice(std::uint32_t default_n) const;
};

const std::vector<std::string>& experiment_names();

/// Applies one key=value setting. Throws ConfigError naming the key when it is unknown
/// or its value does not parse or is out of range.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

/// Flat key=value file; blank lines and lines starting with '#' are skipped.
RunConfig load_config_file(const std::string& path, RunConfig base = {});
RunConfig parse_config_text(const std::string& text, RunConfig base = {});

/// Cross-field checks (known experiment, pin only for sampling, ...). Throws ConfigError.
void validate(const RunConfig& cfg);

/// Canonical key=value dump of the explicitly known settings, sorted by key.
std::map<std::string, std::string> describe(const RunConfig& cfg);

}  // namespace cdrp
