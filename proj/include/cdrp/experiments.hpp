#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cdrp/config.hpp"
#include "cdrp/results.hpp"

namespace cdrp {

struct ExperimentOutput {
  ResultTable results;
  std::vector<std::pair<std::string, CsvTable>> data;  // file stem, table
};

/// Runs the named experiment without touching the file system (snapshots excepted).
ExperimentOutput execute_experiment(const RunConfig& cfg);

/// Validates the config, applies the thread count, runs the experiment and writes
/// <out_dir>/<experiment>_results.csv plus one <out_dir>/<stem>.csv per data table.
ResultTable run_experiment(const RunConfig& cfg);

/// 0 when every row passes, 1 otherwise.
int exit_status(const ResultTable& table);

}  // namespace cdrp
