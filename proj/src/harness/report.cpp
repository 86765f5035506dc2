#include "harness/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <boost/algorithm/string.hpp>

#include "core/common.hpp"

namespace gpelod::harness {

const std::vector<std::string> kReportColumns = {
    "experiment", "H",      "ell",    "tau",    "t",     "mass",    "energy",
    "energy_lod", "momentum", "xc",   "err_l2", "err_h1", "iters", "wall_ms"};

namespace {

std::optional<double> finite_or_empty(double v) {
  if (std::isnan(v)) return std::nullopt;
  return v;
}

void open_or_throw(std::ofstream& os, const std::filesystem::path& p) {
  os.open(p);
  if (!os) throw IoError("cannot write " + p.string());
}

void write_header(std::ostream& os, const RunReport& r) {
  os << "# experiment = " << r.experiment << '\n';
  for (const auto& line : r.header) os << "# " << line << '\n';
}

}  // namespace

void ReportRow::set_invariants(const inv::InvariantRecord& r) {
  t = r.t;
  mass = r.mass;
  energy = r.energy;
  energy_lod = finite_or_empty(r.energy_lod);
  momentum = r.momentum;
  xc = r.xc;
}

void Table::add(std::vector<std::string> row) {
  if (row.size() != columns.size()) {
    throw DimensionMismatch("table " + name + ": row width does not match columns");
  }
  rows.push_back(std::move(row));
}

Table& RunReport::table(const std::string& name, std::vector<std::string> columns) {
  for (auto& t : tables) {
    if (t.name == name) return t;
  }
  tables.push_back({name, std::move(columns), {}});
  return tables.back();
}

const Table* RunReport::find_table(const std::string& name) const {
  for (const auto& t : tables) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

void RunReport::put(const std::string& key, const std::string& value) {
  for (auto& [k, v] : summary) {
    if (k == key) {
      v = value;
      return;
    }
  }
  summary.emplace_back(key, value);
}

void RunReport::put(const std::string& key, double value) { put(key, format_number(value)); }

std::optional<std::string> RunReport::get(const std::string& key) const {
  for (const auto& [k, v] : summary) {
    if (k == key) return v;
  }
  return std::nullopt;
}

bool RunReport::all_checks_passed() const {
  for (const auto& c : checks) {
    if (!c.passed) return false;
  }
  return true;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_optional(const std::optional<double>& v) {
  return v ? format_number(*v) : std::string();
}

std::string csv_line(const ReportRow& r) {
  const std::optional<double> fields[] = {r.H,      r.ell,        r.tau,      r.t,
                                          r.mass,   r.energy,     r.energy_lod,
                                          r.momentum, r.xc,       r.err_l2,
                                          r.err_h1, r.iters,      r.wall_ms};
  std::string out = r.experiment;
  for (const auto& f : fields) {
    out += ',';
    out += format_optional(f);
  }
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> parts;
  boost::split(parts, line, boost::is_any_of(","));
  return parts;
}

std::vector<std::string> write_report(const RunReport& report, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
  std::vector<std::string> written;
  const fs::path base(dir);

  {
    const auto p = base / (report.experiment + ".csv");
    std::ofstream os;
    open_or_throw(os, p);
    write_header(os, report);
    os << boost::join(kReportColumns, ",") << '\n';
    for (const auto& r : report.rows) os << csv_line(r) << '\n';
    written.push_back(p.string());
  }
  for (const auto& t : report.tables) {
    const auto p = base / (report.experiment + "_" + t.name + ".csv");
    std::ofstream os;
    open_or_throw(os, p);
    write_header(os, report);
    os << boost::join(t.columns, ",") << '\n';
    for (const auto& row : t.rows) os << boost::join(row, ",") << '\n';
    written.push_back(p.string());
  }
  {
    const auto p = base / (report.experiment + "_summary.txt");
    std::ofstream os;
    open_or_throw(os, p);
    write_header(os, report);
    for (const auto& [k, v] : report.summary) os << k << " = " << v << '\n';
    for (const auto& f : report.failures) os << "failure = " << f << '\n';
    for (const auto& c : report.checks) {
      os << "check." << c.name << " = " << (c.passed ? "pass" : "fail");
      if (!c.detail.empty()) os << " (" << c.detail << ')';
      os << '\n';
    }
    written.push_back(p.string());
  }
  for (const auto& s : report.snapshots) {
    const auto p = base / (report.experiment + "_density_" + s.name + ".csv");
    std::ofstream os;
    open_or_throw(os, p);
    os << "x,density\n";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      os << format_number(s.x[i]) << ',' << format_number(s.density[i]) << '\n';
    }
    written.push_back(p.string());
  }
  return written;
}

}  // namespace gpelod::harness
