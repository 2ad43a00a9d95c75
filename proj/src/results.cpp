#include "cdrp/results.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "cdrp/errors.hpp"

namespace cdrp {

std::string_view to_string(Rule r) {
  switch (r) {
    case Rule::abs: return "abs";
    case Rule::se: return "se";
    case Rule::rel: return "rel";
    case Rule::range: return "range";
    case Rule::upper: return "upper";
    case Rule::lower: return "lower";
    default: return "info";
  }
}

bool ResultRow::pass() const {
  if (std::isnan(estimate)) return rule == Rule::info;
  const double dev = std::fabs(estimate - target);
  switch (rule) {
    case Rule::abs: return dev <= tolerance;
    case Rule::se: return dev <= tolerance * (exact ? 0.0 : stderr_);
    case Rule::rel: return dev <= tolerance * std::fabs(target);
    case Rule::range: return estimate >= target && estimate <= tolerance;
    case Rule::upper: return estimate < tolerance;
    case Rule::lower: return estimate > tolerance;
    default: return true;
  }
}

void ResultTable::add_exact(std::string metric, double estimate, double target, double tolerance, Rule rule) {
  rows_.push_back({std::move(metric), estimate, target, 0.0, true, tolerance, rule});
}

void ResultTable::add_stat(std::string metric, double estimate, double stderr_, double target, double tolerance,
                           Rule rule) {
  rows_.push_back({std::move(metric), estimate, target, stderr_, false, tolerance, rule});
}

void ResultTable::append(const ResultTable& other) {
  rows_.insert(rows_.end(), other.rows_.begin(), other.rows_.end());
}

bool ResultTable::all_pass() const { return failures() == 0; }

std::size_t ResultTable::failures() const {
  std::size_t n = 0;
  for (const auto& r : rows_) n += r.pass() ? 0 : 1;
  return n;
}

std::string format_number(double x, bool exact) {
  if (std::isnan(x)) return "";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, exact ? "%.17g" : "%.10g", x);
  return buf;
}

std::string format_integer(long long x) { return std::to_string(x); }

namespace {

// Shortest decimal text that reads back to the same double.
std::string format_shortest(double x) {
  if (std::isnan(x)) return "";
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string quote(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

void append_line(std::string& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += quote(fields[i]);
  }
  out += "\r\n";
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw IoError("write to '" + path + "' failed");
}

}  // namespace

std::string to_csv(const ResultTable& table) {
  std::string out;
  append_line(out, {"metric", "estimate", "target", "stderr", "exact", "tolerance", "rule", "pass"});
  for (const auto& r : table.rows()) {
    const bool bounds_only = r.rule == Rule::upper || r.rule == Rule::lower || r.rule == Rule::info;
    append_line(out, {r.metric, format_number(r.estimate, r.exact),
                      bounds_only ? std::string() : format_shortest(r.target),
                      r.exact ? std::string() : format_number(r.stderr_, false), r.exact ? "1" : "0",
                      r.rule == Rule::info ? std::string() : format_shortest(r.tolerance),
                      std::string(to_string(r.rule)), r.pass() ? "PASS" : "FAIL"});
  }
  return out;
}

std::string to_csv(const CsvTable& table) {
  std::string out;
  append_line(out, table.header);
  for (const auto& row : table.rows) append_line(out, row);
  return out;
}

void emit_csv(const ResultTable& table, const std::string& path) { write_file(path, to_csv(table)); }

void write_csv(const CsvTable& table, const std::string& path) { write_file(path, to_csv(table)); }

std::string summary_line(const ResultTable& table) {
  const std::size_t n = table.rows().size();
  const std::size_t bad = table.failures();
  std::string line = table.experiment() + ": " + (bad == 0 ? "PASS" : "FAIL");
  if (bad == 0) return line + " (" + std::to_string(n) + " rows)";
  line += " (" + std::to_string(bad) + " of " + std::to_string(n) + " rows failed:";
  for (const auto& r : table.rows())
    if (!r.pass()) line += " " + r.metric;
  return line + ")";
}

}  // namespace cdrp
