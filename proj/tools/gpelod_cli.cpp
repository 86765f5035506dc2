// gpelod: runs one experiment and writes its report.
//
//   gpelod <invariants|decay|converge|drift|cpu> [--config FILE] [--H-exp K]
//          [--ell L] [--tau T] [--steps N] [--out DIR] [--assert]
//
// Exit codes: 0 success, 1 error, 2 assertion failure (--assert),
// 3 solver non-convergence.

#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gpelod/gpelod.h"

namespace {

struct Options {
  std::string config;
  std::optional<int> h_exp;
  std::optional<int> ell;
  std::optional<double> tau;
  std::optional<long long> steps;
  std::string out;
  bool assert_mode = false;
};

int run(const std::string& name, const Options& o) {
  gpelod_overrides ov{};
  if (o.h_exp) {
    ov.has_coarse_exponent = 1;
    ov.coarse_exponent = *o.h_exp;
  }
  if (o.ell) {
    ov.has_layers = 1;
    ov.layers = *o.ell;
  }
  if (o.tau) {
    ov.has_tau = 1;
    ov.tau = *o.tau;
  }
  if (o.steps) {
    ov.has_steps = 1;
    ov.steps = *o.steps;
  }
  if (!o.out.empty()) ov.output_dir = o.out.c_str();

  gpelod_report* report = nullptr;
  gpelod_status s = gpelod_run_experiment(name.c_str(), o.config.empty() ? nullptr : o.config.c_str(),
                                          &ov, &report);
  if (s != GPELOD_OK) {
    std::fprintf(stderr, "gpelod %s: %s: %s\n", name.c_str(), gpelod_status_string(s),
                 gpelod_last_error());
    return s == GPELOD_NOT_CONVERGED ? 3 : 1;
  }
  const char* line = nullptr;
  for (int i = 0; gpelod_report_header(report, i, &line) == GPELOD_OK && line; ++i) {
    std::printf("# %s\n", line);
  }
  s = gpelod_report_write(report, nullptr);
  if (s != GPELOD_OK) {
    std::fprintf(stderr, "gpelod %s: %s\n", name.c_str(), gpelod_last_error());
    gpelod_report_destroy(report);
    return 1;
  }

  int checks = 0, failed = 0, failures = 0, nonconverged = 0;
  gpelod_report_counts(report, &checks, &failed, &failures, &nonconverged);
  for (int i = 0; i < failures; ++i) {
    const char* msg = nullptr;
    gpelod_report_failure(report, i, &msg);
    std::fprintf(stderr, "failure: %s\n", msg);
  }
  for (int i = 0; i < checks; ++i) {
    const char* cname = nullptr;
    const char* detail = nullptr;
    int passed = 0;
    gpelod_report_check(report, i, &cname, &passed, &detail);
    std::printf("%s %s: %s\n", passed ? "PASS" : "FAIL", cname, detail);
  }
  gpelod_report_destroy(report);
  if (nonconverged) return 3;
  if (o.assert_mode && failed > 0) return 2;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LOD Crank-Nicolson experiments for the 1D Gross-Pitaevskii equation"};
  app.require_subcommand(1);
  Options opts;
  int code = 0;
  const char* names[][2] = {
      {"invariants", "mass/energy/momentum of the initial projection versus H"},
      {"decay", "energy error versus the number of corrector layers"},
      {"converge", "L2/H1 errors at the final time versus H and tau"},
      {"drift", "long-time soliton drift against the energy-offset model"},
      {"cpu", "per-step cost of LOD and fine-grid schemes at matched accuracy"},
  };
  for (const auto& [name, help] : names) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opts.config, "INI configuration file")->check(CLI::ExistingFile);
    sub->add_option("--H-exp", opts.h_exp, "single coarse exponent k, H = (b - a) / 2^k");
    sub->add_option("--ell", opts.ell, "number of corrector layers");
    sub->add_option("--tau", opts.tau, "time step (keeps the final time)");
    sub->add_option("--steps", opts.steps, "number of time steps (keeps tau)");
    sub->add_option("--out", opts.out, "output directory");
    sub->add_flag("--assert", opts.assert_mode, "exit with code 2 if a check fails");
    sub->callback([&code, &opts, n = std::string(name)] { code = run(n, opts); });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  return code;
}
