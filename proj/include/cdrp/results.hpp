#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cdrp {

/// How a result row is judged. `target` and `tolerance` mean:
///   abs    |estimate - target| <= tolerance
///   se     |estimate - target| <= tolerance * stderr
///   rel    |estimate - target| <= tolerance * |target|
///   range  target <= estimate <= tolerance
///   upper  estimate < tolerance
///   lower  estimate > tolerance
///   info   always passes; reported for context only
enum class Rule { abs, se, rel, range, upper, lower, info };

std::string_view to_string(Rule r);

struct ResultRow {
  std::string metric;
  double estimate = 0.0;
  double target = 0.0;
  double stderr_ = 0.0;
  bool exact = false;  // deterministic quantity, no standard error
  double tolerance = 0.0;
  Rule rule = Rule::info;

  bool pass() const;
};

class ResultTable {
 public:
  explicit ResultTable(std::string experiment = {}) : experiment_(std::move(experiment)) {}

  const std::string& experiment() const { return experiment_; }
  const std::vector<ResultRow>& rows() const { return rows_; }
  bool empty() const { return rows_.empty(); }

  void add(ResultRow row) { rows_.push_back(std::move(row)); }
  void add_exact(std::string metric, double estimate, double target, double tolerance, Rule rule);
  void add_stat(std::string metric, double estimate, double stderr_, double target, double tolerance, Rule rule);
  void append(const ResultTable& other);

  bool all_pass() const;
  std::size_t failures() const;

 private:
  std::string experiment_;
  std::vector<ResultRow> rows_;
};

/// Plain rectangular CSV used for data dumps (paths, field rows, per-replica values).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }
};

/// 17 significant digits when `exact` (reads back to the same double), otherwise 10.
/// NaN is written as an empty field.
std::string format_number(double x, bool exact = true);
std::string format_integer(long long x);

std::string to_csv(const ResultTable& table);
std::string to_csv(const CsvTable& table);

/// Throws IoError if the file cannot be written.
void emit_csv(const ResultTable& table, const std::string& path);
void write_csv(const CsvTable& table, const std::string& path);

/// One line such as "qvar: PASS (4 rows)" or "qvar: FAIL (1 of 4 rows failed: mean_qv)".
std::string summary_line(const ResultTable& table);

}  // namespace cdrp
