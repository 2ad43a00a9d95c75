#include "cdrp/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cdrp/diagnostics.hpp"
#include "cdrp/errors.hpp"
#include "cdrp/results.hpp"

namespace cdrp {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& why) {
  throw ConfigError("invalid value '" + value + "' for key '" + key + "': " + why);
}

template <class T>
T parse_unsigned(const std::string& key, const std::string& value, T lo, T hi) {
  unsigned long long v = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || ptr != end) bad(key, value, "expected a nonnegative integer");
  if (v < static_cast<unsigned long long>(lo) || v > static_cast<unsigned long long>(hi))
    bad(key, value, "out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return static_cast<T>(v);
}

double parse_real(const std::string& key, const std::string& value) {
  double v = 0.0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) bad(key, value, "expected a finite number");
  return v;
}

double parse_positive(const std::string& key, const std::string& value) {
  const double v = parse_real(key, value);
  if (!(v > 0.0)) bad(key, value, "must be positive");
  return v;
}

double parse_nonnegative(const std::string& key, const std::string& value) {
  const double v = parse_real(key, value);
  if (v < 0.0) bad(key, value, "must be nonnegative");
  return v;
}

}  // namespace

LatticeSpec RunConfig::lattice(std::uint32_t default_n) const {
  LatticeSpec s = LatticeSpec::continuum(n_time.value_or(default_n), horizon_T.value_or(1.0));
  if (space_halfwidth_L) s.space_halfwidth_L = *space_halfwidth_L;
  s.validate();
  return s;
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"field",      "sample",      "discrete", "moments", "qvar",
                                              "holder",     "martingale",  "lemma-check", "ck-check"};
  return names;
}

void apply_setting(RunConfig& cfg, const std::string& key_in, const std::string& value_in) {
  const std::string key = trim(key_in);
  const std::string value = trim(value_in);
  constexpr std::size_t big = std::size_t{1} << 40;
  if (key == "experiment") {
    cfg.experiment = value;
  } else if (key == "n_time" || key == "n") {
    cfg.n_time = parse_unsigned<std::uint32_t>(key, value, 1, std::uint32_t{1} << 24);
  } else if (key == "horizon_T") {
    cfg.horizon_T = parse_positive(key, value);
  } else if (key == "space_halfwidth_L") {
    cfg.space_halfwidth_L = parse_positive(key, value);
  } else if (key == "beta") {
    cfg.beta = parse_nonnegative(key, value);
  } else if (key == "seed") {
    cfg.seed = parse_unsigned<std::uint64_t>(key, value, 0, ~std::uint64_t{0});
  } else if (key == "disorder_distribution" || key == "dist") {
    try {
      cfg.dist = parse_disorder(value);
    } catch (const ConfigError&) {
      bad(key, value, "expected gaussian or rademacher");
    }
  } else if (key == "scheme") {
    try {
      cfg.scheme = parse_scheme(value);
    } catch (const ConfigError&) {
      bad(key, value, "expected tm or euler");
    }
  } else if (key == "replicas") {
    cfg.replicas = parse_unsigned<std::size_t>(key, value, 1, big);
  } else if (key == "envs") {
    cfg.envs = parse_unsigned<std::size_t>(key, value, 1, big);
  } else if (key == "paths") {
    cfg.paths = parse_unsigned<std::size_t>(key, value, 1, big);
  } else if (key == "level") {
    cfg.level = parse_unsigned<int>(key, value, 0, 20);
  } else if (key == "pin") {
    if (value == "free") cfg.pin.reset();
    else cfg.pin = parse_real(key, value);
  } else if (key == "gamma") {
    cfg.gamma = parse_positive(key, value);
  } else if (key == "functional") {
    if (value != "all") {
      try {
        (void)parse_functional(value);
      } catch (const ConfigError&) {
        bad(key, value, "expected const_one, endpoint_square, halftime_sign or all");
      }
      cfg.functional = value;
    } else {
      cfg.functional.reset();
    }
  } else if (key == "tol_se") {
    cfg.tol_se = parse_positive(key, value);
  } else if (key == "tol_exact") {
    cfg.tol_exact = parse_positive(key, value);
  } else if (key == "tol_rel") {
    cfg.tol_rel = parse_positive(key, value);
  } else if (key == "threads") {
    cfg.threads = parse_unsigned<unsigned>(key, value, 0, 1024);
  } else if (key == "memory_budget_mb") {
    cfg.memory_budget_mb = parse_unsigned<std::size_t>(key, value, 0, std::size_t{1} << 30);
  } else if (key == "out_dir") {
    if (value.empty()) bad(key, value, "must not be empty");
    cfg.out_dir = value;
  } else if (key == "snapshot_in") {
    cfg.snapshot_in = value;
  } else if (key == "snapshot_out") {
    cfg.snapshot_out = value;
  } else {
    throw ConfigError("unknown key '" + key + "'");
  }
}

RunConfig parse_config_text(const std::string& text, RunConfig base) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key=value, got '" + t + "'");
    apply_setting(base, t.substr(0, eq), t.substr(eq + 1));
  }
  return base;
}

RunConfig load_config_file(const std::string& path, RunConfig base) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str(), std::move(base));
}

void validate(const RunConfig& cfg) {
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), cfg.experiment) == names.end())
    throw ConfigError("unknown experiment '" + cfg.experiment + "'");
  if (cfg.pin && cfg.experiment != "sample") throw ConfigError("key 'pin' only applies to the sample experiment");
  if (!cfg.snapshot_in.empty() && cfg.experiment != "sample")
    throw ConfigError("key 'snapshot_in' only applies to the sample experiment");
  if (!cfg.snapshot_out.empty() && cfg.experiment != "sample" && cfg.experiment != "field")
    throw ConfigError("key 'snapshot_out' only applies to the field and sample experiments");
  if (cfg.n_time || cfg.horizon_T || cfg.space_halfwidth_L) (void)cfg.lattice(1);
}

std::map<std::string, std::string> describe(const RunConfig& cfg) {
  std::map<std::string, std::string> m;
  m["experiment"] = cfg.experiment;
  m["seed"] = std::to_string(cfg.seed);
  m["disorder_distribution"] = std::string(to_string(cfg.dist));
  m["scheme"] = std::string(to_string(cfg.scheme));
  if (cfg.n_time) m["n_time"] = std::to_string(*cfg.n_time);
  if (cfg.horizon_T) m["horizon_T"] = format_number(*cfg.horizon_T);
  if (cfg.space_halfwidth_L) m["space_halfwidth_L"] = format_number(*cfg.space_halfwidth_L);
  if (cfg.beta) m["beta"] = format_number(*cfg.beta);
  if (cfg.replicas) m["replicas"] = std::to_string(*cfg.replicas);
  if (cfg.envs) m["envs"] = std::to_string(*cfg.envs);
  if (cfg.paths) m["paths"] = std::to_string(*cfg.paths);
  if (cfg.level) m["level"] = std::to_string(*cfg.level);
  m["pin"] = cfg.pin ? format_number(*cfg.pin) : "free";
  if (cfg.gamma) m["gamma"] = format_number(*cfg.gamma);
  m["functional"] = cfg.functional.value_or("all");
  m["tol_se"] = format_number(cfg.tol_se);
  m["tol_exact"] = format_number(cfg.tol_exact);
  if (cfg.tol_rel) m["tol_rel"] = format_number(*cfg.tol_rel);
  return m;
}

}  // namespace cdrp
