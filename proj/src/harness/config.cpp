#include "harness/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace gpelod::harness {

namespace pt = boost::property_tree;

namespace {

const std::set<std::string> kKnownKeys = {
    "problem.kind",          "problem.a",
    "problem.b",             "problem.beta",
    "problem.v1",            "problem.v2",
    "problem.initial",       "grid.coarse_exponents",
    "grid.fine_exponent",    "lod.layers",
    "lod.omega_tolerance",   "lod.cache_dir",
    "time.tau",              "time.steps",
    "time.final_time",       "time.observe_every",
    "solver.tolerance",      "solver.max_iterations",
    "solver.newton",         "converge.tau_sweep",
    "converge.tau_sweep_exponent", "drift.fem_exponent",
    "drift.run_lod",         "drift.sample_every",
    "drift.snapshot_times",  "cpu.fem_min_exponent",
    "cpu.fem_max_exponent",  "cpu.newton_steps",
    "cpu.iteration_exponents", "cpu.iteration_fine_exponent",
    "cpu.iteration_steps",   "run.output_dir",
    "run.seed",              "run.threads",
};

template <class T>
T to_number(const std::string& key, const std::string& text) {
  std::istringstream is(boost::trim_copy(text));
  T v{};
  is >> v;
  if (is.fail() || !is.eof()) {
    throw ConfigError("config: '" + key + "' is not a valid number: '" + text + "'");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  const std::string t = boost::to_lower_copy(boost::trim_copy(text));
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError("config: '" + key + "' is not a boolean: '" + text + "'");
}

template <class T>
std::vector<T> to_list(const std::string& key, const std::string& text) {
  std::vector<std::string> parts;
  boost::split(parts, text, boost::is_any_of(","));
  std::vector<T> out;
  for (const auto& p : parts) {
    if (boost::trim_copy(p).empty()) continue;
    out.push_back(to_number<T>(key, p));
  }
  if (out.empty()) throw ConfigError("config: '" + key + "' is an empty list");
  return out;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

ExperimentConfig from_tree(const pt::ptree& tree) {
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError("config: key '" + section + "' outside a section");
    }
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      if (!kKnownKeys.count(full)) throw ConfigError("config: unknown key '" + full + "'");
    }
  }
  ExperimentConfig c;
  auto get = [&tree](const std::string& key) -> std::optional<std::string> {
    if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(key, '.'))) {
      return boost::trim_copy(*v);
    }
    return std::nullopt;
  };
  if (auto v = get("problem.kind")) c.problem = boost::to_lower_copy(*v);
  if (auto v = get("problem.a")) c.a = to_number<double>("problem.a", *v);
  if (auto v = get("problem.b")) c.b = to_number<double>("problem.b", *v);
  if (auto v = get("problem.beta")) c.beta = to_number<double>("problem.beta", *v);
  if (auto v = get("problem.v1")) c.v1 = *v;
  if (auto v = get("problem.v2")) c.v2 = *v;
  if (auto v = get("problem.initial")) c.initial = *v;
  if (auto v = get("grid.coarse_exponents")) {
    c.coarse_exponents = to_list<int>("grid.coarse_exponents", *v);
  }
  if (auto v = get("grid.fine_exponent")) c.fine_exponent = to_number<int>("grid.fine_exponent", *v);
  if (auto v = get("lod.layers")) {
    if (boost::to_lower_copy(*v) == "auto") {
      c.layers.clear();
    } else {
      c.layers = to_list<int>("lod.layers", *v);
    }
  }
  if (auto v = get("lod.omega_tolerance")) {
    c.omega_tolerance = to_number<double>("lod.omega_tolerance", *v);
  }
  if (auto v = get("lod.cache_dir")) c.cache_dir = *v;
  if (auto v = get("time.tau")) c.tau = to_number<double>("time.tau", *v);
  if (auto v = get("time.steps")) c.steps = to_number<long long>("time.steps", *v);
  if (auto v = get("time.final_time")) c.final_time = to_number<double>("time.final_time", *v);
  if (auto v = get("time.observe_every")) {
    c.observe_every = to_number<long long>("time.observe_every", *v);
  }
  if (auto v = get("solver.tolerance")) c.solver.tolerance = to_number<double>("solver.tolerance", *v);
  if (auto v = get("solver.max_iterations")) {
    c.solver.max_iterations = to_number<int>("solver.max_iterations", *v);
  }
  if (auto v = get("solver.newton")) c.solver.newton = to_bool("solver.newton", *v);
  if (auto v = get("converge.tau_sweep")) c.tau_sweep = to_list<double>("converge.tau_sweep", *v);
  if (auto v = get("converge.tau_sweep_exponent")) {
    c.tau_sweep_exponent = to_number<int>("converge.tau_sweep_exponent", *v);
  }
  if (auto v = get("drift.fem_exponent")) {
    c.drift_fem_exponent = to_number<int>("drift.fem_exponent", *v);
  }
  if (auto v = get("drift.run_lod")) c.drift_run_lod = to_bool("drift.run_lod", *v);
  if (auto v = get("drift.sample_every")) {
    c.drift_sample_every = to_number<double>("drift.sample_every", *v);
  }
  if (auto v = get("drift.snapshot_times")) {
    c.drift_snapshot_times = to_list<double>("drift.snapshot_times", *v);
  }
  if (auto v = get("cpu.fem_min_exponent")) {
    c.cpu_fem_min_exponent = to_number<int>("cpu.fem_min_exponent", *v);
  }
  if (auto v = get("cpu.fem_max_exponent")) {
    c.cpu_fem_max_exponent = to_number<int>("cpu.fem_max_exponent", *v);
  }
  if (auto v = get("cpu.newton_steps")) c.cpu_newton_steps = to_number<int>("cpu.newton_steps", *v);
  if (auto v = get("cpu.iteration_exponents")) {
    c.cpu_iteration_exponents = to_list<int>("cpu.iteration_exponents", *v);
  }
  if (auto v = get("cpu.iteration_fine_exponent")) {
    c.cpu_iteration_fine_exponent = to_number<int>("cpu.iteration_fine_exponent", *v);
  }
  if (auto v = get("cpu.iteration_steps")) {
    c.cpu_iteration_steps = to_number<long long>("cpu.iteration_steps", *v);
  }
  if (auto v = get("run.output_dir")) c.output_dir = *v;
  if (auto v = get("run.seed")) c.seed = to_number<std::uint64_t>("run.seed", *v);
  if (auto v = get("run.threads")) c.threads = to_number<int>("run.threads", *v);
  c.validate();
  return c;
}

}  // namespace

TimeGrid ExperimentConfig::time_grid() const {
  const int given = (tau ? 1 : 0) + (steps ? 1 : 0) + (final_time ? 1 : 0);
  if (given < 2) {
    throw ConfigError("config: give at least two of time.tau, time.steps, time.final_time");
  }
  if (tau && !(*tau > 0.0)) throw ConfigError("config: time.tau must be > 0");
  if (steps && *steps < 0) throw ConfigError("config: time.steps must be >= 0");
  if (final_time && *final_time < 0.0) throw ConfigError("config: time.final_time must be >= 0");
  if (tau && steps) {
    if (final_time) {
      const double t = static_cast<double>(*steps) * *tau;
      if (std::abs(t - *final_time) > 1e-9 * std::max(1.0, *final_time)) {
        throw ConfigError("config: final_time != steps * tau");
      }
    }
    return {*tau, *steps};
  }
  if (tau) {
    const double n = *final_time / *tau;
    const auto rounded = std::llround(n);
    if (std::abs(n - static_cast<double>(rounded)) > 1e-6) {
      throw ConfigError("config: final_time is not a multiple of tau");
    }
    return {*tau, rounded};
  }
  if (*steps <= 0) throw ConfigError("config: cannot derive tau from zero steps");
  return {*final_time / static_cast<double>(*steps), *steps};
}

void ExperimentConfig::validate() const {
  if (problem != "benchmark" && problem != "custom") {
    throw ConfigError("config: problem.kind must be 'benchmark' or 'custom'");
  }
  if (problem == "benchmark" && (a != -20.0 || b != 20.0 || beta != -2.0 ||
                                 v1 != "zero" || v2 != "zero" || initial != "benchmark")) {
    throw ConfigError("config: the benchmark fixes domain, beta, potential and initial value");
  }
  if (!(b > a)) throw ConfigError("config: require a < b");
  if (coarse_exponents.empty()) throw ConfigError("config: no coarse exponents");
  for (int k : coarse_exponents) {
    if (k < 1 || k >= fine_exponent) {
      throw ConfigError("config: coarse exponents must satisfy 1 <= k < fine_exponent");
    }
  }
  if (fine_exponent > 24) throw ConfigError("config: fine_exponent must be <= 24");
  for (int l : layers) {
    if (l < 1) throw ConfigError("config: layers must be >= 1");
  }
  if (omega_tolerance < 0.0) throw ConfigError("config: omega_tolerance must be >= 0");
  if (observe_every < 0) throw ConfigError("config: observe_every must be >= 0");
  if (!(solver.tolerance > 0.0) || solver.max_iterations < 1) {
    throw ConfigError("config: solver tolerance must be > 0 and max_iterations >= 1");
  }
  if (tau_sweep.size() < 3) throw ConfigError("config: tau_sweep needs >= 3 values");
  for (double t : tau_sweep) {
    if (!(t > 0.0)) throw ConfigError("config: tau_sweep values must be > 0");
  }
  if (tau_sweep_exponent < 1 || tau_sweep_exponent >= fine_exponent) {
    throw ConfigError("config: tau_sweep_exponent must be in [1, fine_exponent)");
  }
  if (drift_fem_exponent < 2 || drift_fem_exponent > 24) {
    throw ConfigError("config: drift.fem_exponent out of range");
  }
  if (!(drift_sample_every > 0.0)) throw ConfigError("config: drift.sample_every must be > 0");
  if (cpu_fem_min_exponent < 2 || cpu_fem_max_exponent > 24 ||
      cpu_fem_min_exponent > cpu_fem_max_exponent) {
    throw ConfigError("config: bad cpu FEM exponent range");
  }
  for (int k : cpu_iteration_exponents) {
    if (k < 1 || k >= cpu_iteration_fine_exponent) {
      throw ConfigError("config: cpu.iteration_exponents must be < iteration_fine_exponent");
    }
  }
  if (cpu_iteration_fine_exponent > 24) throw ConfigError("config: iteration_fine_exponent > 24");
  if (cpu_iteration_steps < 1 || cpu_newton_steps < 0) {
    throw ConfigError("config: cpu step counts out of range");
  }
  if (threads < 0) throw ConfigError("config: run.threads must be >= 0");
  if (tau || steps || final_time) {
    const int given = (tau ? 1 : 0) + (steps ? 1 : 0) + (final_time ? 1 : 0);
    if (given >= 2) (void)time_grid();
  }
}

std::vector<std::string> ExperimentConfig::describe() const {
  auto opt = [](const auto& o) -> std::string {
    if (!o) return "";
    if constexpr (std::is_floating_point_v<std::decay_t<decltype(*o)>>) {
      return num(*o);
    } else {
      return std::to_string(*o);
    }
  };
  return {
      "problem.kind = " + problem,
      "problem.a = " + num(a),
      "problem.b = " + num(b),
      "problem.beta = " + num(beta),
      "problem.v1 = " + v1,
      "problem.v2 = " + v2,
      "problem.initial = " + initial,
      "grid.coarse_exponents = " + join(coarse_exponents),
      "grid.fine_exponent = " + std::to_string(fine_exponent),
      "lod.layers = " + (layers.empty() ? std::string("auto") : join(layers)),
      "lod.omega_tolerance = " + num(omega_tolerance),
      "lod.cache_dir = " + cache_dir,
      "time.tau = " + opt(tau),
      "time.steps = " + opt(steps),
      "time.final_time = " + opt(final_time),
      "time.observe_every = " + std::to_string(observe_every),
      "solver.tolerance = " + num(solver.tolerance),
      "solver.max_iterations = " + std::to_string(solver.max_iterations),
      std::string("solver.newton = ") + (solver.newton ? "true" : "false"),
      "converge.tau_sweep = " + join(tau_sweep),
      "converge.tau_sweep_exponent = " + std::to_string(tau_sweep_exponent),
      "drift.fem_exponent = " + std::to_string(drift_fem_exponent),
      std::string("drift.run_lod = ") + (drift_run_lod ? "true" : "false"),
      "drift.sample_every = " + num(drift_sample_every),
      "drift.snapshot_times = " + join(drift_snapshot_times),
      "cpu.fem_min_exponent = " + std::to_string(cpu_fem_min_exponent),
      "cpu.fem_max_exponent = " + std::to_string(cpu_fem_max_exponent),
      "cpu.newton_steps = " + std::to_string(cpu_newton_steps),
      "cpu.iteration_exponents = " + join(cpu_iteration_exponents),
      "cpu.iteration_fine_exponent = " + std::to_string(cpu_iteration_fine_exponent),
      "cpu.iteration_steps = " + std::to_string(cpu_iteration_steps),
      "run.output_dir = " + output_dir,
      "run.seed = " + std::to_string(seed),
      "run.threads = " + std::to_string(threads),
  };
}

ExperimentConfig parse_config(const std::string& ini_text) {
  std::istringstream is(ini_text);
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return from_tree(tree);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config file " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str());
}

void apply_overrides(ExperimentConfig& cfg, const Overrides& o) {
  if (o.coarse_exponent) cfg.coarse_exponents = {*o.coarse_exponent};
  if (o.layers) cfg.layers = {*o.layers};
  if (o.tau) {
    cfg.tau = *o.tau;
    if (cfg.final_time && !o.steps) cfg.steps.reset();
  }
  if (o.steps) {
    cfg.steps = *o.steps;
    cfg.final_time.reset();
  }
  if (o.output_dir) cfg.output_dir = *o.output_dir;
  cfg.validate();
}

}  // namespace gpelod::harness
