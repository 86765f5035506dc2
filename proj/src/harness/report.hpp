#pragma once

// Run reports: one main CSV with a fixed column set, side tables (orders,
// timings, iterations, peaks), a key/value summary and density snapshots.
// Numbers are written with 17 significant digits so reruns compare exactly.

#include <deque>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "core/invariants.hpp"

namespace gpelod::harness {

struct ReportRow {
  std::string experiment;
  std::optional<double> H, ell, tau, t;
  std::optional<double> mass, energy, energy_lod, momentum, xc;
  std::optional<double> err_l2, err_h1;
  std::optional<double> iters, wall_ms;

  void set_invariants(const inv::InvariantRecord& r);
};

// Free-form table written as <experiment>_<name>.csv.
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row);
};

struct Snapshot {
  std::string name;
  std::vector<double> x;
  std::vector<double> density;
};

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct RunReport {
  std::string experiment;
  std::vector<std::string> header;  // resolved configuration
  std::vector<ReportRow> rows;
  std::deque<Table> tables;  // deque: references from table() stay valid
  std::vector<std::pair<std::string, std::string>> summary;
  std::vector<Snapshot> snapshots;
  std::vector<Check> checks;
  bool nonconverged = false;
  std::vector<std::string> failures;  // per-point errors that did not stop the sweep

  Table& table(const std::string& name, std::vector<std::string> columns);
  const Table* find_table(const std::string& name) const;
  void put(const std::string& key, const std::string& value);
  void put(const std::string& key, double value);
  std::optional<std::string> get(const std::string& key) const;
  bool all_checks_passed() const;
};

extern const std::vector<std::string> kReportColumns;

std::string format_number(double v);
std::string format_optional(const std::optional<double>& v);

// CSV line for the fixed columns, absent values as empty fields.
std::string csv_line(const ReportRow& row);
std::vector<std::string> split_csv_line(const std::string& line);

// Writes every file of the report into `dir` (created if needed) and
// returns the written paths.
std::vector<std::string> write_report(const RunReport& report, const std::string& dir);

}  // namespace gpelod::harness
