// Command line front end: one subcommand per experiment.
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "cdrp/config.hpp"
#include "cdrp/errors.hpp"
#include "cdrp/experiments.hpp"

namespace {

constexpr int kUsageError = 2;

struct Flag {
  const char* name;
  const char* key;
  const char* help;
};

// Flags that map one to one onto config keys. Later sources win: config file, then flags.
constexpr Flag kFlags[] = {
    {"--seed", "seed", "master seed"},
    {"--threads", "threads", "worker threads (0 = all cores)"},
    {"--out-dir", "out_dir", "directory for CSV output"},
    {"--dist", "disorder_distribution", "gaussian or rademacher"},
    {"--scheme", "scheme", "tm or euler"},
    {"--beta", "beta", "inverse temperature"},
    {"--n", "n_time", "time steps"},
    {"--T", "horizon_T", "time horizon"},
    {"--L", "space_halfwidth_L", "spatial half width"},
    {"--level", "level", "dyadic level"},
    {"--paths", "paths", "number of sampled paths"},
    {"--replicas", "replicas", "Monte Carlo replicas"},
    {"--envs", "envs", "environments for path ensembles"},
    {"--pin", "pin", "terminal point x or 'free'"},
    {"--gamma", "gamma", "exponent of the GRR functional"},
    {"--functional", "functional", "const_one, endpoint_square, halftime_sign or all"},
    {"--snapshot-in", "snapshot_in", "read the field from a snapshot"},
    {"--snapshot-out", "snapshot_out", "write the field to a snapshot"},
    {"--memory-budget-mb", "memory_budget_mb", "memory budget for environments and caches"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuum directed random polymer experiments"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> overrides;
  std::vector<std::pair<std::string, std::string>> flag_values;
  flag_values.reserve(std::size(kFlags));
  app.add_option("--config", config_path, "key=value config file");
  app.add_option("--set", overrides, "extra key=value override (repeatable)");
  for (const Flag& f : kFlags) {
    flag_values.emplace_back(f.key, std::string());
    app.add_option(f.name, flag_values.back().second, f.help);
  }
  app.fallthrough();  // global flags may follow the subcommand
  for (const auto& name : cdrp::experiment_names()) app.add_subcommand(name, "run the " + name + " experiment");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    cdrp::RunConfig cfg;
    if (!config_path.empty()) cfg = cdrp::load_config_file(config_path);
    cfg.experiment = app.get_subcommands().front()->get_name();
    for (std::size_t i = 0; i < std::size(kFlags); ++i)
      if (app.count(kFlags[i].name) > 0) cdrp::apply_setting(cfg, flag_values[i].first, flag_values[i].second);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw cdrp::ConfigError("--set expects key=value, got '" + kv + "'");
      cdrp::apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    const cdrp::ResultTable table = cdrp::run_experiment(cfg);
    std::printf("%s\n", cdrp::summary_line(table).c_str());
    return cdrp::exit_status(table);
  } catch (const cdrp::ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
  } catch (const cdrp::CapacityError& e) {
    std::fprintf(stderr, "capacity error: %s\n", e.what());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
  }
  return kUsageError;
}
