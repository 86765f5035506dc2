#include "gpelod/gpelod.h"

#include <cmath>
#include <memory>
#include <new>
#include <optional>
#include <string>

#include "core/benchmark.hpp"
#include "core/dynamics.hpp"
#include "core/invariants.hpp"
#include "core/lod.hpp"
#include "harness/config.hpp"
#include "harness/experiments.hpp"
#include "harness/potentials.hpp"
#include "harness/report.hpp"

using namespace gpelod;

struct gpelod_grid {
  fem::GridHierarchy grid;
};

struct gpelod_space {
  std::shared_ptr<const lod::LodSpace> space;
  double beta = 0.0;
};

struct gpelod_stepper {
  dyn::Stepper stepper;
};

struct gpelod_report {
  harness::RunReport report;
  std::string output_dir;
};

namespace {

thread_local std::string g_last_error;

gpelod_status fail(gpelod_status s, const std::string& what) {
  g_last_error = what;
  return s;
}

gpelod_status map_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::invalid_argument: return GPELOD_INVALID_ARGUMENT;
    case ErrorCode::dimension_mismatch: return GPELOD_DIMENSION_MISMATCH;
    case ErrorCode::singular_matrix: return GPELOD_SINGULAR_MATRIX;
    case ErrorCode::not_converged: return GPELOD_NOT_CONVERGED;
    case ErrorCode::io: return GPELOD_IO_ERROR;
    case ErrorCode::config: return GPELOD_CONFIG_ERROR;
    case ErrorCode::assertion: return GPELOD_ASSERTION_FAILED;
  }
  return GPELOD_INTERNAL_ERROR;
}

// Runs f and converts exceptions into status codes.
template <class F>
gpelod_status guarded(F&& f) {
  try {
    g_last_error.clear();
    f();
    return GPELOD_OK;
  } catch (const Error& e) {
    return fail(map_code(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(GPELOD_INTERNAL_ERROR, "out of memory");
  } catch (const std::exception& e) {
    return fail(GPELOD_INTERNAL_ERROR, e.what());
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw InvalidArgument(what);
}

CVector read_complex(const double* p, std::size_t n) {
  CVector v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = {p[2 * i], p[2 * i + 1]};
  return v;
}

void write_complex(std::span<const Complex> v, double* p) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    p[2 * i] = v[i].real();
    p[2 * i + 1] = v[i].imag();
  }
}

void copy_record(const inv::InvariantRecord& r, gpelod_invariants* out) {
  *out = {r.t, r.mass, r.energy, r.energy_lod, r.momentum, r.xc};
}

dyn::SolverOptions solver_options(const gpelod_solver_options* o) {
  dyn::SolverOptions s;
  if (!o) return s;
  if (o->tolerance > 0.0) s.tolerance = o->tolerance;
  if (o->max_iterations > 0) s.max_iterations = o->max_iterations;
  s.newton = o->newton != 0;
  return s;
}

std::string str(const char* s, const char* fallback) { return s ? s : fallback; }

}  // namespace

extern "C" {

const char* gpelod_version(void) { return "1.0.0"; }

const char* gpelod_last_error(void) { return g_last_error.c_str(); }

const char* gpelod_status_string(gpelod_status s) {
  switch (s) {
    case GPELOD_OK: return "ok";
    case GPELOD_INVALID_ARGUMENT: return "invalid argument";
    case GPELOD_DIMENSION_MISMATCH: return "dimension mismatch";
    case GPELOD_SINGULAR_MATRIX: return "singular matrix";
    case GPELOD_NOT_CONVERGED: return "not converged";
    case GPELOD_IO_ERROR: return "i/o error";
    case GPELOD_CONFIG_ERROR: return "configuration error";
    case GPELOD_ASSERTION_FAILED: return "assertion failed";
    case GPELOD_INTERNAL_ERROR: return "internal error";
  }
  return "unknown status";
}

gpelod_status gpelod_grid_create(double a, double b, int coarse_elements, int refinement,
                                 gpelod_grid** out) {
  return guarded([&] {
    require(out != nullptr, "grid_create: null output");
    *out = nullptr;
    require(std::isfinite(a) && std::isfinite(b) && b > a, "grid_create: need a < b");
    require(coarse_elements >= 1, "grid_create: need at least one coarse element");
    require(refinement >= 0 && refinement <= 24, "grid_create: refinement out of range");
    *out = new gpelod_grid{fem::GridHierarchy(a, b, coarse_elements, refinement)};
  });
}

void gpelod_grid_destroy(gpelod_grid* grid) { delete grid; }

gpelod_status gpelod_grid_info(const gpelod_grid* g, double* coarse_h, double* fine_h,
                               int* fine_dofs) {
  return guarded([&] {
    require(g != nullptr, "grid_info: null grid");
    if (coarse_h) *coarse_h = g->grid.coarse_h();
    if (fine_h) *fine_h = g->grid.fine_h();
    if (fine_dofs) *fine_dofs = g->grid.dofs(fem::Level::fine);
  });
}

gpelod_status gpelod_benchmark_interpolant(const gpelod_grid* g, double t, double* values) {
  return guarded([&] {
    require(g != nullptr && values != nullptr, "benchmark_interpolant: null argument");
    write_complex(bench::exact_interpolant(g->grid, t), values);
  });
}

gpelod_status gpelod_fine_invariants(const gpelod_grid* g, const double* values,
                                     const char* potential, double beta,
                                     gpelod_invariants* out) {
  return guarded([&] {
    require(g && values && out, "fine_invariants: null argument");
    const auto v = harness::parse_potential(str(potential, "zero"), g->grid.coarse_h());
    const auto u = read_complex(values, static_cast<std::size_t>(g->grid.dofs(fem::Level::fine)));
    copy_record(inv::evaluate(g->grid, u, v, beta, 0.0), out);
  });
}

gpelod_status gpelod_space_create(const gpelod_grid* g, const char* v1, const char* v2,
                                  double beta, int layers, double omega_tolerance,
                                  gpelod_space** out) {
  return guarded([&] {
    require(out != nullptr, "space_create: null output");
    *out = nullptr;
    require(g != nullptr, "space_create: null grid");
    require(std::isfinite(beta), "space_create: beta must be finite");
    const double H = g->grid.coarse_h();
    fem::PotentialSplit split{harness::parse_potential(str(v1, "zero"), H),
                              harness::parse_potential(str(v2, "zero"), H), beta};
    lod::LodOptions opt;
    opt.layers = layers;
    opt.omega_tolerance = omega_tolerance;
    auto space = std::make_shared<const lod::LodSpace>(lod::build_lod_space(g->grid, split, opt));
    *out = new gpelod_space{std::move(space), beta};
  });
}

void gpelod_space_destroy(gpelod_space* space) { delete space; }

gpelod_status gpelod_space_info(const gpelod_space* s, int* dim, int* layers,
                                size_t* omega_entries) {
  return guarded([&] {
    require(s != nullptr, "space_info: null space");
    if (dim) *dim = s->space->dim();
    if (layers) *layers = s->space->layers();
    if (omega_entries) *omega_entries = s->space->omega().size();
  });
}

gpelod_status gpelod_space_ritz_project(const gpelod_space* s, const double* fine,
                                        double* coefficients) {
  return guarded([&] {
    require(s && fine && coefficients, "space_ritz_project: null argument");
    const auto& grid = s->space->grid();
    const auto u = read_complex(fine, static_cast<std::size_t>(grid.dofs(fem::Level::fine)));
    write_complex(lod::ritz_project(*s->space, {fem::Level::fine, u}), coefficients);
  });
}

gpelod_status gpelod_space_expand(const gpelod_space* s, const double* coefficients,
                                  double* fine) {
  return guarded([&] {
    require(s && coefficients && fine, "space_expand: null argument");
    const auto c = read_complex(coefficients, static_cast<std::size_t>(s->space->dim()));
    write_complex(s->space->expand(c), fine);
  });
}

gpelod_status gpelod_space_invariants(const gpelod_space* s, const double* coefficients,
                                      double t, gpelod_invariants* out) {
  return guarded([&] {
    require(s && coefficients && out, "space_invariants: null argument");
    const auto c = read_complex(coefficients, static_cast<std::size_t>(s->space->dim()));
    copy_record(inv::evaluate(*s->space, c, s->beta, t), out);
  });
}

gpelod_status gpelod_stepper_create_lod(const gpelod_space* s, gpelod_scheme scheme,
                                        double tau, const gpelod_solver_options* options,
                                        gpelod_stepper** out) {
  return guarded([&] {
    require(out != nullptr, "stepper_create_lod: null output");
    *out = nullptr;
    require(s != nullptr, "stepper_create_lod: null space");
    const auto opt = solver_options(options);
    if (scheme == GPELOD_SCHEME_MODIFIED_LOD) {
      *out = new gpelod_stepper{dyn::Stepper::modified(s->space, s->beta, tau, opt)};
    } else if (scheme == GPELOD_SCHEME_CLASSICAL_LOD) {
      *out = new gpelod_stepper{dyn::Stepper::classical_lod(s->space, s->beta, tau, opt)};
    } else {
      throw InvalidArgument("stepper_create_lod: scheme must be an LOD scheme");
    }
  });
}

gpelod_status gpelod_stepper_create_fem(const gpelod_grid* g, const char* potential,
                                        double beta, double tau,
                                        const gpelod_solver_options* options,
                                        gpelod_stepper** out) {
  return guarded([&] {
    require(out != nullptr, "stepper_create_fem: null output");
    *out = nullptr;
    require(g != nullptr, "stepper_create_fem: null grid");
    const auto v = harness::parse_potential(str(potential, "zero"), g->grid.coarse_h());
    *out = new gpelod_stepper{
        dyn::Stepper::classical_fem(g->grid, v, beta, tau, solver_options(options))};
  });
}

void gpelod_stepper_destroy(gpelod_stepper* stepper) { delete stepper; }

gpelod_status gpelod_stepper_dim(const gpelod_stepper* st, int* dim) {
  return guarded([&] {
    require(st && dim, "stepper_dim: null argument");
    *dim = st->stepper.dim();
  });
}

gpelod_status gpelod_stepper_set_state(gpelod_stepper* st, const double* values, double t) {
  return guarded([&] {
    require(st && values, "stepper_set_state: null argument");
    st->stepper.set_state(read_complex(values, static_cast<std::size_t>(st->stepper.dim())), t);
  });
}

gpelod_status gpelod_stepper_get_state(const gpelod_stepper* st, double* values, double* t) {
  return guarded([&] {
    require(st != nullptr, "stepper_get_state: null stepper");
    if (values) write_complex(st->stepper.state(), values);
    if (t) *t = st->stepper.time();
  });
}

gpelod_status gpelod_stepper_advance(gpelod_stepper* st, long long steps, int* last_iterations) {
  return guarded([&] {
    require(st != nullptr, "stepper_advance: null stepper");
    require(steps >= 0, "stepper_advance: negative step count");
    for (long long n = 0; n < steps; ++n) st->stepper.step();
    if (last_iterations) *last_iterations = st->stepper.last_stats().iterations;
  });
}

gpelod_status gpelod_run_experiment(const char* name, const char* config_path,
                                    const gpelod_overrides* ov, gpelod_report** out) {
  return guarded([&] {
    require(out != nullptr, "run_experiment: null output");
    *out = nullptr;
    require(name != nullptr, "run_experiment: null experiment name");
    auto cfg = config_path ? harness::load_config(config_path) : harness::ExperimentConfig{};
    if (ov) {
      harness::Overrides o;
      if (ov->has_coarse_exponent) o.coarse_exponent = ov->coarse_exponent;
      if (ov->has_layers) o.layers = ov->layers;
      if (ov->has_tau) o.tau = ov->tau;
      if (ov->has_steps) o.steps = ov->steps;
      if (ov->output_dir) o.output_dir = std::string(ov->output_dir);
      harness::apply_overrides(cfg, o);
    }
    auto report = std::make_unique<gpelod_report>();
    report->report = harness::run_experiment(name, cfg);
    report->output_dir = cfg.output_dir;
    *out = report.release();
  });
}

void gpelod_report_destroy(gpelod_report* report) { delete report; }

gpelod_status gpelod_report_write(const gpelod_report* r, const char* directory) {
  return guarded([&] {
    require(r != nullptr, "report_write: null report");
    harness::write_report(r->report, directory ? directory : r->output_dir);
  });
}

gpelod_status gpelod_report_counts(const gpelod_report* r, int* checks, int* failed_checks,
                                   int* failures, int* nonconverged) {
  return guarded([&] {
    require(r != nullptr, "report_counts: null report");
    int failed = 0;
    for (const auto& c : r->report.checks) failed += c.passed ? 0 : 1;
    if (checks) *checks = static_cast<int>(r->report.checks.size());
    if (failed_checks) *failed_checks = failed;
    if (failures) *failures = static_cast<int>(r->report.failures.size());
    if (nonconverged) *nonconverged = r->report.nonconverged ? 1 : 0;
  });
}

gpelod_status gpelod_report_check(const gpelod_report* r, int index, const char** name,
                                  int* passed, const char** detail) {
  return guarded([&] {
    require(r != nullptr, "report_check: null report");
    require(index >= 0 && index < static_cast<int>(r->report.checks.size()),
            "report_check: index out of range");
    const auto& c = r->report.checks[static_cast<std::size_t>(index)];
    if (name) *name = c.name.c_str();
    if (passed) *passed = c.passed ? 1 : 0;
    if (detail) *detail = c.detail.c_str();
  });
}

gpelod_status gpelod_report_failure(const gpelod_report* r, int index, const char** message) {
  return guarded([&] {
    require(r && message, "report_failure: null argument");
    require(index >= 0 && index < static_cast<int>(r->report.failures.size()),
            "report_failure: index out of range");
    *message = r->report.failures[static_cast<std::size_t>(index)].c_str();
  });
}

gpelod_status gpelod_report_summary(const gpelod_report* r, const char* key,
                                    const char** value) {
  return guarded([&] {
    require(r && key && value, "report_summary: null argument");
    *value = nullptr;
    for (const auto& [k, v] : r->report.summary) {
      if (k == key) {
        *value = v.c_str();
        return;
      }
    }
  });
}

gpelod_status gpelod_report_header(const gpelod_report* r, int index, const char** line) {
  return guarded([&] {
    require(r && line, "report_header: null argument");
    require(index >= 0, "report_header: negative index");
    const auto& h = r->report.header;
    *line = index < static_cast<int>(h.size()) ? h[static_cast<std::size_t>(index)].c_str()
                                               : nullptr;
  });
}

}  // extern "C"
