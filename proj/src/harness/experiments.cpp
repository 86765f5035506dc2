#include "harness/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <thread>

#include <boost/algorithm/string.hpp>

#include "core/benchmark.hpp"
#include "core/dynamics.hpp"
#include "core/invariants.hpp"
#include "harness/potentials.hpp"

namespace gpelod::harness {

using fem::Level;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

// Runs f(0..n-1) on up to `threads` workers; results keep index order.
template <class R, class F>
std::vector<R> run_points(std::size_t n, int threads, F f) {
  std::vector<R> out(n);
  unsigned hw = threads > 0 ? static_cast<unsigned>(threads)
                            : std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers = std::min<std::size_t>(hw, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) out[i] = f(i);
      });
    }
  }
  return out;
}

std::string fmt(double v) { return format_number(v); }

std::string k_label(int k) { return std::to_string(k); }

RunReport start_report(const std::string& name, const ExperimentConfig& cfg) {
  RunReport r;
  r.experiment = name;
  r.header = cfg.describe();
  return r;
}

void add_check(RunReport& r, std::string name, bool passed, std::string detail) {
  r.checks.push_back({std::move(name), passed, std::move(detail)});
}

std::vector<double> fine_density(std::span<const Complex> fine) {
  std::vector<double> d(fine.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::norm(fine[i]);
  return d;
}

std::vector<double> fine_x(const fem::GridHierarchy& grid) {
  std::vector<double> x(static_cast<std::size_t>(grid.dofs(Level::fine)));
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = grid.dof_x(Level::fine, static_cast<int>(i));
  return x;
}

struct Evolution {
  std::vector<ReportRow> rows;
  std::vector<int> iterations;
  CVector final_state;
  double build_ms = 0.0;
  double factor_ms = 0.0;
  double step_ms = 0.0;
  long long steps_done = 0;
  std::optional<std::string> failure;
  lod::BuildTimings timings;
};

// Modified CN in the LOD space from the Ritz projection of the initial
// value, sampling invariants (and errors for the benchmark).
Evolution evolve_lod(const ExperimentConfig& cfg, const ProblemSetup& setup,
                     const std::string& label, int layers, double tau, long long steps,
                     long long stride) {
  Evolution ev;
  const SpaceBuild b = build_space(cfg, setup, layers);
  ev.build_ms = b.wall_ms;
  ev.timings = b.space->timings();
  const auto u0 = fem::interpolate(setup.grid, Level::fine, setup.initial);
  const CVector U0 = lod::ritz_project(*b.space, {Level::fine, u0});
  double t0 = now_ms();
  auto stepper = dyn::Stepper::modified(b.space, setup.split.beta, tau, cfg.solver);
  ev.factor_ms = now_ms() - t0;
  stepper.set_state(U0);
  auto observe = [&](long long, double t, std::span<const Complex> u) {
    ReportRow row;
    row.experiment = label;
    row.H = setup.grid.coarse_h();
    row.ell = b.space->layers();
    row.tau = tau;
    row.set_invariants(inv::evaluate(*b.space, u, setup.split.beta, t));
    if (setup.benchmark) {
      const auto e = bench::error_norms(*b.space, u, t);
      row.err_l2 = e.l2;
      row.err_h1 = e.h1;
    }
    ev.rows.push_back(std::move(row));
  };
  t0 = now_ms();
  const auto tr = dyn::evolve(stepper, steps, stride, observe);
  ev.step_ms = now_ms() - t0;
  ev.iterations = tr.iterations;
  ev.steps_done = tr.steps_done;
  ev.failure = tr.failure;
  ev.final_state = stepper.state();
  return ev;
}

void add_iterations(RunReport& r, const std::string& label, const std::vector<int>& its) {
  auto& t = r.table("iterations", {"run", "step", "iters"});
  for (std::size_t i = 0; i < its.size(); ++i) {
    t.add({label, std::to_string(i + 1), std::to_string(its[i])});
  }
}

void add_timings(RunReport& r, const std::string& label, const lod::BuildTimings& b,
                 double factor_ms, double step_ms, long long steps) {
  auto& t = r.table("timings", {"run", "phase", "ms"});
  t.add({label, "basis", fmt(b.basis_ms)});
  t.add({label, "matrices", fmt(b.matrices_ms)});
  t.add({label, "omega", fmt(b.omega_ms)});
  t.add({label, "factorization", fmt(factor_ms)});
  t.add({label, "stepping", fmt(step_ms)});
  if (steps > 0) t.add({label, "per_step", fmt(step_ms / static_cast<double>(steps))});
}

double median_int(const std::vector<int>& v) {
  return median(std::vector<double>(v.begin(), v.end()));
}

}  // namespace

// ---------------------------------------------------------------------------
// Shared helpers

ProblemSetup make_setup(const ExperimentConfig& cfg, int coarse_exp, int fine_exp) {
  if (coarse_exp < 1 || fine_exp <= coarse_exp || fine_exp > 24) {
    throw ConfigError("grid exponents must satisfy 1 <= coarse < fine <= 24");
  }
  ProblemSetup s{fem::GridHierarchy(cfg.a, cfg.b, 1 << coarse_exp, fine_exp - coarse_exp),
                 bench::benchmark_split(), {}, cfg.is_benchmark()};
  const double H = s.grid.coarse_h();
  if (!cfg.is_benchmark()) {
    s.split = {parse_potential(cfg.v1, H), parse_potential(cfg.v2, H), cfg.beta};
  }
  const std::string init = boost::to_lower_copy(cfg.initial);
  if (init == "benchmark") {
    s.initial = [](double x) { return bench::exact_solution(x, 0.0); };
  } else if (boost::starts_with(init, "soliton:")) {
    std::vector<std::string> parts;
    boost::split(parts, init.substr(8), boost::is_any_of(","));
    if (parts.size() != 2) throw ConfigError("initial: expected soliton:alpha,c");
    double alpha = 0.0, c = 0.0;
    try {
      alpha = std::stod(parts[0]);
      c = std::stod(parts[1]);
    } catch (const std::exception&) {
      throw ConfigError("initial: bad soliton parameters '" + cfg.initial + "'");
    }
    if (!(alpha > 0.0)) throw ConfigError("initial: soliton alpha must be > 0");
    s.initial = [alpha, c](double x) { return bench::single_soliton(x, 0.0, alpha, c); };
  } else {
    throw ConfigError("initial: unknown initial value '" + cfg.initial + "'");
  }
  return s;
}

SpaceBuild build_space(const ExperimentConfig& cfg, const ProblemSetup& setup, int layers) {
  lod::LodOptions opt;
  opt.layers = layers;
  opt.omega_tolerance = cfg.omega_tolerance;
  SpaceBuild out;
  const double t0 = now_ms();
  std::string path;
  if (!cfg.cache_dir.empty()) {
    std::filesystem::create_directories(cfg.cache_dir);
    const int l = layers > 0 ? layers : lod::default_layers(setup.grid.coarse_h());
    path = (std::filesystem::path(cfg.cache_dir) /
            ("lod_N" + std::to_string(setup.grid.coarse_elements()) + "_r" +
             std::to_string(setup.grid.refinement()) + "_l" + std::to_string(l) + ".bin"))
               .string();
    if (auto cached = lod::load_lod_cache(path, setup.grid, setup.split, opt)) {
      out.space = std::make_shared<const lod::LodSpace>(std::move(*cached));
      out.from_cache = true;
    }
  }
  if (!out.space) {
    out.space =
        std::make_shared<const lod::LodSpace>(lod::build_lod_space(setup.grid, setup.split, opt));
    if (!path.empty()) lod::save_lod_cache(*out.space, path);
  }
  out.wall_ms = now_ms() - t0;
  return out;
}

double observed_order(double err_coarse, double err_fine, double param_ratio) {
  if (!(err_coarse > 0.0) || !(err_fine > 0.0) || !(param_ratio > 1.0)) return kNaN;
  return std::log(err_coarse / err_fine) / std::log(param_ratio);
}

double median(std::vector<double> v) {
  std::erase_if(v, [](double x) { return std::isnan(x); });
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::size_t saturation_index(const std::vector<double>& errors, double rel) {
  if (errors.empty()) return 0;
  const double last = errors.back();
  std::size_t idx = errors.size() - 1;
  while (idx > 0 && std::abs(errors[idx - 1] - last) <= rel * std::abs(last)) --idx;
  return idx;
}

std::vector<std::pair<double, double>> density_peaks(const std::vector<double>& x,
                                                     const std::vector<double>& d,
                                                     double threshold) {
  std::vector<std::pair<double, double>> peaks;
  for (std::size_t i = 1; i + 1 < d.size(); ++i) {
    if (!(d[i] > d[i - 1] && d[i] >= d[i + 1] && d[i] > threshold)) continue;
    // Vertex of the parabola through the three samples (uniform spacing).
    const double dx = x[i + 1] - x[i];
    const double curv = d[i - 1] - 2.0 * d[i] + d[i + 1];
    double shift = 0.0, height = d[i];
    if (curv < 0.0) {
      shift = 0.5 * (d[i - 1] - d[i + 1]) / curv;
      height = d[i] - 0.25 * (d[i - 1] - d[i + 1]) * shift;
    }
    peaks.emplace_back(x[i] + shift * dx, height);
  }
  std::stable_sort(peaks.begin(), peaks.end(),
                   [](const auto& p, const auto& q) { return p.second > q.second; });
  return peaks;
}

double fit_slope(const std::vector<double>& t, const std::vector<double>& y) {
  const std::size_t n = t.size();
  if (n < 2 || y.size() != n) return kNaN;
  double mt = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mt += t[i];
    my += y[i];
  }
  mt /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += (t[i] - mt) * (y[i] - my);
    den += (t[i] - mt) * (t[i] - mt);
  }
  return den > 0.0 ? num / den : kNaN;
}

// ---------------------------------------------------------------------------
// Invariants of the Ritz projection versus H

RunReport run_invariant_convergence(const ExperimentConfig& cfg) {
  RunReport report = start_report("invariants", cfg);
  struct Point {
    int k = 0;
    inv::InvariantRecord rec;
    bench::ErrorNorms err;
    double H = 0.0, ell = 0.0, wall = 0.0;
    lod::BuildTimings timings;
    std::string error;
  };
  const auto& ks = cfg.coarse_exponents;
  const int layers = cfg.layers.empty() ? 0 : cfg.layers.front();
  const auto points = run_points<Point>(ks.size(), cfg.threads, [&](std::size_t i) {
    Point p;
    p.k = ks[i];
    try {
      const auto setup = make_setup(cfg, p.k, cfg.fine_exponent);
      const auto b = build_space(cfg, setup, layers);
      const auto u0 = fem::interpolate(setup.grid, Level::fine, setup.initial);
      const CVector U0 = lod::ritz_project(*b.space, {Level::fine, u0});
      p.rec = inv::evaluate(*b.space, U0, setup.split.beta, 0.0);
      if (setup.benchmark) p.err = bench::error_norms(*b.space, U0, 0.0);
      p.H = setup.grid.coarse_h();
      p.ell = b.space->layers();
      p.wall = b.wall_ms;
      p.timings = b.space->timings();
    } catch (const std::exception& e) {
      p.error = "k=" + k_label(p.k) + ": " + e.what();
    }
    return p;
  });

  const bench::BenchmarkProblem ref;
  std::vector<const Point*> ok;
  for (const auto& p : points) {
    if (!p.error.empty()) {
      report.failures.push_back(p.error);
      continue;
    }
    ok.push_back(&p);
    ReportRow row;
    row.experiment = "invariants";
    row.H = p.H;
    row.ell = p.ell;
    row.set_invariants(p.rec);
    if (cfg.is_benchmark()) {
      row.err_l2 = p.err.l2;
      row.err_h1 = p.err.h1;
    }
    row.wall_ms = p.wall;
    report.rows.push_back(row);
    add_timings(report, "k" + k_label(p.k), p.timings, 0.0, 0.0, 0);
  }
  if (!cfg.is_benchmark()) {
    report.put("orders", "skipped: no reference values for a custom problem");
    return report;
  }

  struct Quantity {
    std::string name;
    std::function<double(const inv::InvariantRecord&)> error;
  };
  const std::vector<Quantity> quantities = {
      {"mass", [&](const auto& r) { return std::abs(r.mass - ref.mass); }},
      {"energy", [&](const auto& r) { return std::abs(r.energy - ref.energy); }},
      {"energy_lod", [&](const auto& r) { return std::abs(r.energy_lod - ref.energy); }},
      {"momentum", [&](const auto& r) { return std::abs(r.momentum - ref.momentum); }},
      {"xc", [&](const auto& r) { return std::abs(r.xc - ref.center_of_mass); }},
  };
  auto& orders = report.table(
      "orders", {"quantity", "k_coarse", "k_fine", "err_coarse", "err_fine", "order"});
  for (const auto& q : quantities) {
    std::vector<double> ord;
    for (std::size_t i = 0; i + 1 < ok.size(); ++i) {
      const double e0 = q.error(ok[i]->rec);
      const double e1 = q.error(ok[i + 1]->rec);
      const double o = observed_order(e0, e1, std::exp2(ok[i + 1]->k - ok[i]->k));
      ord.push_back(o);
      orders.add({q.name, k_label(ok[i]->k), k_label(ok[i + 1]->k), fmt(e0), fmt(e1), fmt(o)});
    }
    report.put("median_order_" + q.name, median(ord));
    for (const auto* p : ok) report.put("error_" + q.name + "_k" + k_label(p->k), q.error(p->rec));
  }
  if (ok.size() >= 2) {
    for (const std::string q : {"energy", "mass"}) {
      const double m = std::stod(*report.get("median_order_" + q));
      add_check(report, "median_order_" + q, m >= 5.5, "median order " + fmt(m) + ", need >= 5.5");
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Energy error of the initial projection versus the number of layers

RunReport run_locality_decay(const ExperimentConfig& cfg) {
  RunReport report = start_report("decay", cfg);
  std::vector<int> layers = cfg.layers;
  if (layers.empty()) {
    for (int l = 1; l <= 12; ++l) layers.push_back(l);
  }
  if (!std::is_sorted(layers.begin(), layers.end())) {
    throw ConfigError("decay: layers must be ascending");
  }
  if (!cfg.is_benchmark()) throw ConfigError("decay: needs the benchmark problem");
  const auto& ks = cfg.coarse_exponents;
  struct Point {
    int k = 0, ell = 0;
    double H = 0.0, wall = 0.0;
    inv::InvariantRecord rec;
    std::string error;
  };
  const std::size_t nl = layers.size();
  const auto points = run_points<Point>(ks.size() * nl, cfg.threads, [&](std::size_t i) {
    Point p;
    p.k = ks[i / nl];
    p.ell = layers[i % nl];
    try {
      const auto setup = make_setup(cfg, p.k, cfg.fine_exponent);
      const auto b = build_space(cfg, setup, p.ell);
      const auto u0 = fem::interpolate(setup.grid, Level::fine, setup.initial);
      const CVector U0 = lod::ritz_project(*b.space, {Level::fine, u0});
      p.rec = inv::evaluate(*b.space, U0, setup.split.beta, 0.0);
      p.H = setup.grid.coarse_h();
      p.wall = b.wall_ms;
    } catch (const std::exception& e) {
      p.error = "k=" + k_label(p.k) + " ell=" + std::to_string(p.ell) + ": " + e.what();
    }
    return p;
  });

  const bench::BenchmarkProblem ref;
  auto& decay = report.table("decay", {"k", "H", "ell", "energy_error", "ratio_to_next"});
  std::vector<std::pair<int, int>> saturation;  // (k, ell*)
  for (std::size_t ki = 0; ki < ks.size(); ++ki) {
    std::vector<const Point*> ok;
    for (std::size_t li = 0; li < nl; ++li) {
      const Point& p = points[ki * nl + li];
      if (!p.error.empty()) {
        report.failures.push_back(p.error);
        continue;
      }
      ok.push_back(&p);
      ReportRow row;
      row.experiment = "decay";
      row.H = p.H;
      row.ell = p.ell;
      row.set_invariants(p.rec);
      row.wall_ms = p.wall;
      report.rows.push_back(row);
    }
    std::vector<double> err;
    for (const auto* p : ok) err.push_back(std::abs(p->rec.energy - ref.energy));
    for (std::size_t i = 0; i < ok.size(); ++i) {
      const bool next = i + 1 < ok.size();
      decay.add({k_label(ok[i]->k), fmt(ok[i]->H), std::to_string(ok[i]->ell), fmt(err[i]),
                 next ? fmt(err[i] / err[i + 1]) : std::string()});
    }
    if (ok.size() < 2) continue;
    const std::string tag = "_k" + k_label(ks[ki]);
    const std::size_t sat = saturation_index(err, 0.1);
    const int ell_star = ok[sat]->ell;
    saturation.emplace_back(ks[ki], ell_star);
    report.put("saturation_ell" + tag, static_cast<double>(ell_star));
    report.put("floor" + tag, err[sat]);
    report.put("last_error" + tag, err.back());
    // Geometric decay before saturation: every pair (ell, ell + 1) that lies
    // strictly below ell*.
    double worst = std::numeric_limits<double>::infinity();
    std::size_t pairs = 0;
    for (std::size_t i = 0; i + 1 < sat; ++i) {
      if (ok[i + 1]->ell != ok[i]->ell + 1) continue;
      worst = std::min(worst, err[i] / err[i + 1]);
      ++pairs;
    }
    report.put("min_decay_ratio" + tag, pairs ? worst : kNaN);
    add_check(report, "geometric_decay" + tag, pairs == 0 || worst >= 2.0,
              "ell*=" + std::to_string(ell_star) + ", smallest pre-saturation ratio " +
                  (pairs ? fmt(worst) : std::string("n/a")) + ", need >= 2");
    const bool floor_ok = std::abs(err[sat] - err.back()) <= 0.1 * err.back();
    add_check(report, "floor" + tag, floor_ok,
              "floor " + fmt(err[sat]) + " vs last " + fmt(err.back()));
  }
  if (saturation.size() >= 2) {
    bool nondecreasing = true;
    std::string seq;
    for (std::size_t i = 0; i < saturation.size(); ++i) {
      seq += (i ? "," : "") + std::to_string(saturation[i].second);
      if (i > 0 && saturation[i].first > saturation[i - 1].first &&
          saturation[i].second < saturation[i - 1].second) {
        nondecreasing = false;
      }
    }
    add_check(report, "saturation_growth", nondecreasing, "ell* sequence " + seq);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Errors at the final time: H sweep at fixed tau, tau sweep at fixed H

RunReport run_time_convergence(const ExperimentConfig& cfg) {
  RunReport report = start_report("converge", cfg);
  if (!cfg.is_benchmark()) throw ConfigError("converge: needs the benchmark problem");
  const TimeGrid tg = cfg.time_grid();
  const double final_time = tg.tau * static_cast<double>(tg.steps);
  const int layers = cfg.layers.empty() ? 0 : cfg.layers.front();

  struct Point {
    int k = 0;
    double tau = 0.0;
    Evolution ev;
    std::string error;
  };
  // H sweep at (tg.tau, tg.steps).
  const auto& ks = cfg.coarse_exponents;
  const auto hpts = run_points<Point>(ks.size(), cfg.threads, [&](std::size_t i) {
    Point p;
    p.k = ks[i];
    p.tau = tg.tau;
    try {
      const auto setup = make_setup(cfg, p.k, cfg.fine_exponent);
      p.ev = evolve_lod(cfg, setup, "converge-h", layers, tg.tau, tg.steps, cfg.observe_every);
    } catch (const std::exception& e) {
      p.error = "H sweep k=" + k_label(p.k) + ": " + e.what();
    }
    return p;
  });
  // tau sweep at one H, same final time.
  std::shared_ptr<const lod::LodSpace> tau_space;
  std::string tau_space_error;
  try {
    const auto setup = make_setup(cfg, cfg.tau_sweep_exponent, cfg.fine_exponent);
    tau_space = build_space(cfg, setup, layers).space;
  } catch (const std::exception& e) {
    tau_space_error = e.what();
  }
  const auto& taus = cfg.tau_sweep;
  const auto tpts = run_points<Point>(taus.size(), cfg.threads, [&](std::size_t i) {
    Point p;
    p.k = cfg.tau_sweep_exponent;
    p.tau = taus[i];
    try {
      if (!tau_space) throw Error(ErrorCode::invalid_argument, tau_space_error);
      const double n = final_time / p.tau;
      const auto steps = std::llround(n);
      if (std::abs(n - static_cast<double>(steps)) > 1e-6) {
        throw ConfigError("final time is not a multiple of tau=" + fmt(p.tau));
      }
      const auto setup = make_setup(cfg, p.k, cfg.fine_exponent);
      p.ev.build_ms = 0.0;
      const auto u0 = fem::interpolate(setup.grid, Level::fine, setup.initial);
      const CVector U0 = lod::ritz_project(*tau_space, {Level::fine, u0});
      auto stepper = dyn::Stepper::modified(tau_space, setup.split.beta, p.tau, cfg.solver);
      stepper.set_state(U0);
      const double t0 = now_ms();
      const auto tr = dyn::evolve(stepper, steps, 0,
                                  [&](long long, double t, std::span<const Complex> u) {
                                    ReportRow row;
                                    row.experiment = "converge-tau";
                                    row.H = setup.grid.coarse_h();
                                    row.ell = tau_space->layers();
                                    row.tau = p.tau;
                                    row.set_invariants(
                                        inv::evaluate(*tau_space, u, setup.split.beta, t));
                                    const auto e = bench::error_norms(*tau_space, u, t);
                                    row.err_l2 = e.l2;
                                    row.err_h1 = e.h1;
                                    p.ev.rows.push_back(std::move(row));
                                  });
      p.ev.step_ms = now_ms() - t0;
      p.ev.iterations = tr.iterations;
      p.ev.steps_done = tr.steps_done;
      p.ev.failure = tr.failure;
      p.ev.final_state = stepper.state();
    } catch (const std::exception& e) {
      p.error = "tau sweep tau=" + fmt(p.tau) + ": " + e.what();
    }
    return p;
  });

  auto collect = [&](const std::vector<Point>& pts, const std::string& label) {
    std::vector<const Point*> ok;
    for (const auto& p : pts) {
      if (!p.error.empty()) {
        report.failures.push_back(p.error);
        continue;
      }
      if (p.ev.failure) {
        report.nonconverged = true;
        report.failures.push_back(label + ": " + *p.ev.failure);
        continue;
      }
      for (auto row : p.ev.rows) {
        if (!p.ev.iterations.empty()) row.iters = median_int(p.ev.iterations);
        report.rows.push_back(std::move(row));
      }
      const std::string run = label + "_k" + k_label(p.k) + "_tau" + fmt(p.tau);
      add_iterations(report, run, p.ev.iterations);
      add_timings(report, run, p.ev.timings, p.ev.factor_ms, p.ev.step_ms, p.ev.steps_done);
      ok.push_back(&p);
    }
    return ok;
  };

  const auto hok = collect(hpts, "h_sweep");
  auto& orders = report.table("orders", {"sweep", "param_coarse", "param_fine", "norm",
                                         "err_coarse", "err_fine", "ratio", "order"});
  double worst_l2 = std::numeric_limits<double>::infinity();
  double worst_h1 = worst_l2;
  for (std::size_t i = 0; i + 1 < hok.size(); ++i) {
    const auto& a = hok[i]->ev.rows.back();
    const auto& b = hok[i + 1]->ev.rows.back();
    const double step = std::exp2(hok[i + 1]->k - hok[i]->k);
    for (const auto& [norm, ea, eb] : {std::tuple{"l2", *a.err_l2, *b.err_l2},
                                       std::tuple{"h1", *a.err_h1, *b.err_h1}}) {
      const double ratio = ea / eb;
      const double per_halving = std::pow(ratio, 1.0 / std::log2(step));
      orders.add({"H", fmt(*a.H), fmt(*b.H), norm, fmt(ea), fmt(eb), fmt(ratio),
                  fmt(observed_order(ea, eb, step))});
      double& worst = std::string(norm) == "l2" ? worst_l2 : worst_h1;
      worst = std::min(worst, per_halving);
    }
  }
  for (const auto* p : hok) {
    report.put("final_err_l2_k" + k_label(p->k), *p->ev.rows.back().err_l2);
    report.put("final_err_h1_k" + k_label(p->k), *p->ev.rows.back().err_h1);
    report.put("median_iterations_k" + k_label(p->k), median_int(p->ev.iterations));
  }
  if (hok.size() >= 2) {
    report.put("min_ratio_l2", worst_l2);
    report.put("min_ratio_h1", worst_h1);
    add_check(report, "h_sweep_l2_ratio", worst_l2 >= std::exp2(3.5),
              "smallest ratio " + fmt(worst_l2) + ", need >= " + fmt(std::exp2(3.5)));
    add_check(report, "h_sweep_h1_ratio", worst_h1 >= std::exp2(2.5),
              "smallest ratio " + fmt(worst_h1) + ", need >= " + fmt(std::exp2(2.5)));
  }

  // tau orders from differences of successive solutions (the spatial error
  // at fixed H cancels): log(|U_1 - U_2| / |U_2 - U_3|) / log(tau_1 / tau_2).
  if (!tau_space_error.empty()) report.failures.push_back("tau sweep space: " + tau_space_error);
  const auto tok = collect(tpts, "tau_sweep");
  std::vector<double> tau_orders;
  for (std::size_t i = 0; i + 2 < tok.size(); ++i) {
    const auto& u1 = tok[i]->ev.final_state;
    const auto& u2 = tok[i + 1]->ev.final_state;
    const auto& u3 = tok[i + 2]->ev.final_state;
    CVector d12(u1.size()), d23(u1.size());
    for (std::size_t j = 0; j < u1.size(); ++j) {
      d12[j] = u1[j] - u2[j];
      d23[j] = u2[j] - u3[j];
    }
    const double n12 = std::sqrt(linalg::quadratic_form(tau_space->mass(), d12).real());
    const double n23 = std::sqrt(linalg::quadratic_form(tau_space->mass(), d23).real());
    const double o = observed_order(n12, n23, tok[i]->tau / tok[i + 1]->tau);
    tau_orders.push_back(o);
    orders.add({"tau", fmt(tok[i]->tau), fmt(tok[i + 1]->tau), "l2_difference", fmt(n12),
                fmt(n23), fmt(n12 / n23), fmt(o)});
  }
  if (!tau_orders.empty()) {
    const double o = median(tau_orders);
    report.put("tau_order", o);
    add_check(report, "tau_order", o >= 1.7 && o <= 2.3,
              "observed order " + fmt(o) + ", need [1.7, 2.3]");
  }
  return report;
}

// ---------------------------------------------------------------------------
// Long-time soliton drift

namespace {

struct DriftRun {
  double energy_offset = 0.0;
  double predicted_c1 = 0.0;
  double measured_c1 = kNaN;
  double measured_c2 = kNaN;
  double onset = kNaN;
  std::vector<int> iterations;
  std::optional<std::string> failure;
};

// Tracks the two largest density peaks at every sample; once they are more
// than 2 apart the lighter (lower) one is fitted by least squares.
struct PeakTracker {
  std::vector<double> t, light, heavy;
  double onset = kNaN;

  void sample(double time, const std::vector<double>& x, const std::vector<double>& d,
              Table& table, const std::string& run) {
    const auto peaks = density_peaks(x, d, 1.0);
    if (peaks.size() < 2) {
      table.add({run, fmt(time), "", "", ""});
      return;
    }
    const double xh = peaks[0].first, xl = peaks[1].first;
    table.add({run, fmt(time), fmt(xl), fmt(xh), fmt(std::abs(xl - xh))});
    if (std::abs(xl - xh) <= 2.0) return;
    if (std::isnan(onset)) onset = time;
    t.push_back(time);
    light.push_back(xl);
    heavy.push_back(xh);
  }
};

}  // namespace

RunReport run_long_time_drift(const ExperimentConfig& cfg) {
  RunReport report = start_report("drift", cfg);
  if (!cfg.is_benchmark()) throw ConfigError("drift: needs the benchmark problem");
  const TimeGrid tg = cfg.time_grid();
  const long long stride = std::max<long long>(1, std::llround(cfg.drift_sample_every / tg.tau));
  auto& peaks = report.table("peaks", {"run", "t", "x_light", "x_heavy", "separation"});
  const double ref_energy = bench::BenchmarkProblem{}.energy;

  auto snapshot_due = [&](long long n) {
    for (double s : cfg.drift_snapshot_times) {
      if (std::llround(s / tg.tau) == n) return true;
    }
    return false;
  };

  auto finish = [&](DriftRun& run, PeakTracker& tr, const std::string& label) {
    run.onset = tr.onset;
    if (tr.t.size() >= 3) {
      run.measured_c1 = std::abs(fit_slope(tr.t, tr.light));
      run.measured_c2 = std::abs(fit_slope(tr.t, tr.heavy));
    }
    report.put(label + ".energy_offset", run.energy_offset);
    report.put(label + ".predicted_c1", run.predicted_c1);
    report.put(label + ".measured_c1", run.measured_c1);
    report.put(label + ".measured_c2", run.measured_c2);
    report.put(label + ".separation_onset", run.onset);
    report.put(label + ".ratio", run.measured_c1 / run.predicted_c1);
    add_iterations(report, label, run.iterations);
    if (run.failure) {
      report.nonconverged = true;
      report.failures.push_back(label + ": " + *run.failure);
    }
  };

  // Classical CN on the coarse FE grid.
  DriftRun fem_run;
  {
    const int m = cfg.drift_fem_exponent;
    const fem::GridHierarchy grid(cfg.a, cfg.b, 2, m - 1);
    const auto split = bench::benchmark_split();
    const auto u0 = bench::exact_interpolant(grid, 0.0);
    fem_run.energy_offset =
        inv::energy(grid, Level::fine, u0, split.total(), split.beta) - ref_energy;
    fem_run.predicted_c1 = bench::drift_velocities(std::abs(fem_run.energy_offset)).c1;
    auto stepper = dyn::Stepper::classical_fem(grid, split.total(), split.beta, tg.tau, cfg.solver);
    stepper.set_state(u0);
    const auto x = fine_x(grid);
    PeakTracker tracker;
    const std::string label = "fem";
    const double t0 = now_ms();
    const auto tr = dyn::evolve(stepper, tg.steps, 1,
                                [&](long long n, double t, std::span<const Complex> u) {
      const bool sample = n % stride == 0 || n == tg.steps;
      const bool snap = snapshot_due(n);
      if (!sample && !snap) return;
      const auto d = fine_density(u);
      if (sample) {
        tracker.sample(t, x, d, peaks, label);
        ReportRow row;
        row.experiment = "drift-fem";
        row.H = grid.fine_h();
        row.tau = tg.tau;
        row.set_invariants(inv::evaluate(grid, u, split.total(), split.beta, t));
        const auto e = bench::error_norms(grid, u, t);
        row.err_l2 = e.l2;
        row.err_h1 = e.h1;
        if (n > 0) row.iters = stepper.last_stats().iterations;
        report.rows.push_back(std::move(row));
      }
      if (snap) report.snapshots.push_back({label + "_t" + fmt(t), x, d});
    });
    add_timings(report, label, {}, 0.0, now_ms() - t0, tr.steps_done);
    fem_run.iterations = tr.iterations;
    fem_run.failure = tr.failure;
    finish(fem_run, tracker, label);
    const double model = std::sqrt(2.0 * std::abs(fem_run.energy_offset) / 3.0);
    const double ratio = fem_run.measured_c1 / model;
    add_check(report, "fem_velocity_model", ratio >= 0.5 && ratio <= 2.0,
              "measured " + fmt(fem_run.measured_c1) + " vs sqrt(2 eps/3) = " + fmt(model) +
                  ", ratio " + fmt(ratio) + ", need [0.5, 2]");
  }

  if (cfg.drift_run_lod) {
    DriftRun lod_run;
    const int k = cfg.coarse_exponents.front();
    const auto setup = make_setup(cfg, k, cfg.fine_exponent);
    const int layers = cfg.layers.empty() ? 0 : cfg.layers.front();
    const auto b = build_space(cfg, setup, layers);
    const auto u0 = fem::interpolate(setup.grid, Level::fine, setup.initial);
    const CVector U0 = lod::ritz_project(*b.space, {Level::fine, u0});
    lod_run.energy_offset = inv::modified_energy(*b.space, U0, setup.split.beta) - ref_energy;
    lod_run.predicted_c1 = bench::drift_velocities(std::abs(lod_run.energy_offset)).c1;
    auto stepper = dyn::Stepper::modified(b.space, setup.split.beta, tg.tau, cfg.solver);
    stepper.set_state(U0);
    const auto x = fine_x(setup.grid);
    PeakTracker tracker;
    const std::string label = "lod";
    const double t0 = now_ms();
    const auto tr = dyn::evolve(stepper, tg.steps, 1,
                                [&](long long n, double t, std::span<const Complex> u) {
      const bool sample = n % stride == 0 || n == tg.steps;
      const bool snap = snapshot_due(n);
      if (!sample && !snap) return;
      const auto d = fine_density(b.space->expand(u));
      if (sample) {
        tracker.sample(t, x, d, peaks, label);
        ReportRow row;
        row.experiment = "drift-lod";
        row.H = setup.grid.coarse_h();
        row.ell = b.space->layers();
        row.tau = tg.tau;
        row.set_invariants(inv::evaluate(*b.space, u, setup.split.beta, t));
        const auto e = bench::error_norms(*b.space, u, t);
        row.err_l2 = e.l2;
        row.err_h1 = e.h1;
        if (n > 0) row.iters = stepper.last_stats().iterations;
        report.rows.push_back(std::move(row));
      }
      if (snap) report.snapshots.push_back({label + "_t" + fmt(t), x, d});
    });
    add_timings(report, label, b.space->timings(), 0.0, now_ms() - t0, tr.steps_done);
    lod_run.iterations = tr.iterations;
    lod_run.failure = tr.failure;
    finish(lod_run, tracker, label);
    // No separation within the run counts as zero measured drift.
    const double measured = std::isnan(lod_run.measured_c1) ? 0.0 : lod_run.measured_c1;
    add_check(report, "lod_below_fem_prediction", measured <= fem_run.predicted_c1,
              "LOD measured " + fmt(measured) + " vs FE predicted " + fmt(fem_run.predicted_c1));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Per-step cost at matched energy accuracy

RunReport run_cpu_comparison(const ExperimentConfig& cfg) {
  RunReport report = start_report("cpu", cfg);
  if (!cfg.is_benchmark()) throw ConfigError("cpu: needs the benchmark problem");
  const TimeGrid tg = cfg.time_grid();
  if (tg.steps < 1) throw ConfigError("cpu: needs at least one step");
  const double ref_energy = bench::BenchmarkProblem{}.energy;
  const int layers = cfg.layers.empty() ? 0 : cfg.layers.front();
  auto& cost = report.table("cost", {"scheme", "resolution", "dofs", "energy_error",
                                     "per_step_ms", "median_iters"});

  auto timed_steps = [&](dyn::Stepper& st, const CVector& u0, long long steps,
                         std::vector<int>& its) {
    st.set_state(u0);
    const double t0 = now_ms();
    const auto tr = dyn::evolve(st, steps, 0);
    const double ms = now_ms() - t0;
    if (tr.failure) {
      report.nonconverged = true;
      report.failures.push_back(*tr.failure);
    }
    its = tr.iterations;
    return tr.steps_done > 0 ? ms / static_cast<double>(tr.steps_done) : kNaN;
  };

  // LOD at the finest configured H.
  const int k = cfg.coarse_exponents.back();
  const auto setup = make_setup(cfg, k, cfg.fine_exponent);
  const auto b = build_space(cfg, setup, layers);
  const auto u0 = fem::interpolate(setup.grid, Level::fine, setup.initial);
  const CVector U0 = lod::ritz_project(*b.space, {Level::fine, u0});
  const double e_lod =
      std::abs(inv::modified_energy(*b.space, U0, setup.split.beta) - ref_energy);
  double t0 = now_ms();
  auto lod_stepper = dyn::Stepper::modified(b.space, setup.split.beta, tg.tau, cfg.solver);
  const double lod_factor = now_ms() - t0;
  std::vector<int> lod_its, lod_its2;
  const double lod_ms = timed_steps(lod_stepper, U0, tg.steps, lod_its);
  const double lod_ms2 = timed_steps(lod_stepper, U0, tg.steps, lod_its2);
  add_timings(report, "lod", b.space->timings(), lod_factor, lod_ms * tg.steps, tg.steps);
  add_iterations(report, "lod", lod_its);
  cost.add({"cn_lod", "k" + k_label(k) + "_m" + std::to_string(cfg.fine_exponent),
            std::to_string(b.space->dim()), fmt(e_lod), fmt(lod_ms), fmt(median_int(lod_its))});
  report.put("lod.dim", static_cast<double>(b.space->dim()));
  report.put("lod.layers", static_cast<double>(b.space->layers()));
  report.put("lod.omega_entries", static_cast<double>(b.space->omega().size()));
  report.put("lod.energy_error", e_lod);
  report.put("lod.per_step_ms", lod_ms);
  report.put("lod.repeat_ratio", lod_ms / lod_ms2);
  add_check(report, "timing_self_consistency", lod_ms / lod_ms2 >= 0.5 && lod_ms / lod_ms2 <= 2.0,
            "repeat ratio " + fmt(lod_ms / lod_ms2));

  // FE resolution whose initial energy error is closest to the LOD one.
  const auto split = bench::benchmark_split();
  auto& match = report.table("match", {"fine_exponent", "energy_error", "log_ratio"});
  int best_m = cfg.cpu_fem_min_exponent;
  double best_gap = std::numeric_limits<double>::infinity(), best_err = kNaN;
  for (int m = cfg.cpu_fem_min_exponent; m <= cfg.cpu_fem_max_exponent; ++m) {
    const fem::GridHierarchy g(cfg.a, cfg.b, 2, m - 1);
    const auto v = bench::exact_interpolant(g, 0.0);
    const double e = std::abs(inv::energy(g, Level::fine, v, split.total(), split.beta) - ref_energy);
    const double gap = std::abs(std::log(e / e_lod));
    match.add({std::to_string(m), fmt(e), fmt(std::log(e / e_lod))});
    if (gap < best_gap) {
      best_gap = gap;
      best_m = m;
      best_err = e;
    }
  }
  const fem::GridHierarchy fg(cfg.a, cfg.b, 2, best_m - 1);
  const auto v0 = bench::exact_interpolant(fg, 0.0);
  t0 = now_ms();
  auto fem_stepper = dyn::Stepper::classical_fem(fg, split.total(), split.beta, tg.tau, cfg.solver);
  const double fem_factor = now_ms() - t0;
  std::vector<int> fem_its;
  const double fem_ms = timed_steps(fem_stepper, v0, tg.steps, fem_its);
  add_timings(report, "fem_fpi", {}, fem_factor, fem_ms * tg.steps, tg.steps);
  add_iterations(report, "fem_fpi", fem_its);
  cost.add({"cn_fem_fpi", "m" + std::to_string(best_m), std::to_string(fg.dofs(Level::fine)),
            fmt(best_err), fmt(fem_ms), fmt(median_int(fem_its))});

  double newton_ms = kNaN;
  if (cfg.cpu_newton_steps > 0) {
    auto opts = cfg.solver;
    opts.newton = true;
    auto newton = dyn::Stepper::classical_fem(fg, split.total(), split.beta, tg.tau, opts);
    std::vector<int> its;
    newton_ms = timed_steps(newton, v0, cfg.cpu_newton_steps, its);
    add_iterations(report, "fem_newton", its);
    cost.add({"cn_fem_newton", "m" + std::to_string(best_m),
              std::to_string(fg.dofs(Level::fine)), fmt(best_err), fmt(newton_ms),
              fmt(median_int(its))});
  }

  const double matched = best_err / e_lod;
  const double speedup = fem_ms / lod_ms;
  report.put("fem.fine_exponent", static_cast<double>(best_m));
  report.put("fem.energy_error", best_err);
  report.put("fem.per_step_ms", fem_ms);
  report.put("fem_newton.per_step_ms", newton_ms);
  report.put("matched_error_ratio", matched);
  report.put("speedup", speedup);
  add_check(report, "matched_accuracy", matched >= 0.5 && matched <= 2.0,
            "FE/LOD energy error ratio " + fmt(matched) + ", need [0.5, 2]");
  add_check(report, "speedup", speedup > 5.0, "speedup " + fmt(speedup) + ", need > 5");

  // Iteration counts across H.
  auto& iters = report.table("iterations_vs_H", {"k", "H", "median_iters"});
  const auto& iks = cfg.cpu_iteration_exponents;
  struct Point {
    int k = 0;
    double H = 0.0, med = kNaN;
    std::string error;
  };
  const auto pts = run_points<Point>(iks.size(), cfg.threads, [&](std::size_t i) {
    Point p;
    p.k = iks[i];
    try {
      const auto s = make_setup(cfg, p.k, cfg.cpu_iteration_fine_exponent);
      const auto ev = evolve_lod(cfg, s, "cpu-iterations", layers, tg.tau,
                                 cfg.cpu_iteration_steps, 0);
      if (ev.failure) throw NotConverged(*ev.failure, 0, 0.0);
      p.H = s.grid.coarse_h();
      p.med = median_int(ev.iterations);
    } catch (const std::exception& e) {
      p.error = "iterations k=" + k_label(p.k) + ": " + e.what();
    }
    return p;
  });
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& p : pts) {
    if (!p.error.empty()) {
      report.failures.push_back(p.error);
      continue;
    }
    iters.add({k_label(p.k), fmt(p.H), fmt(p.med)});
    lo = std::min(lo, p.med);
    hi = std::max(hi, p.med);
  }
  if (hi >= lo) {
    report.put("iteration_spread", hi - lo);
    add_check(report, "iteration_spread", hi - lo <= 2.0,
              "median iterations in [" + fmt(lo) + ", " + fmt(hi) + "], need spread <= 2");
  }
  return report;
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"invariants", "decay", "converge", "drift",
                                                 "cpu"};
  return names;
}

RunReport run_experiment(const std::string& name, const ExperimentConfig& cfg) {
  if (name == "invariants") return run_invariant_convergence(cfg);
  if (name == "decay") return run_locality_decay(cfg);
  if (name == "converge") return run_time_convergence(cfg);
  if (name == "drift") return run_long_time_drift(cfg);
  if (name == "cpu") return run_cpu_comparison(cfg);
  throw InvalidArgument("unknown experiment '" + name + "'");
}

}  // namespace gpelod::harness
