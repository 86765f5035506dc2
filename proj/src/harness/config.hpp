#pragma once

// Experiment configuration: flat INI sections, every key optional.
//
//   [problem]  kind = benchmark | custom, a, b, beta, v1, v2,
//              initial = benchmark | soliton:alpha,c
//   [grid]     coarse_exponents = 5,6,7,8   (H = (b - a) / 2^k)
//              fine_exponent = 13           (h = (b - a) / 2^m)
//   [lod]      layers = auto | 1,2,3, omega_tolerance, cache_dir
//   [time]     tau, steps, final_time (any two), observe_every
//   [solver]   tolerance, max_iterations, newton
//   [converge] tau_sweep, tau_sweep_exponent
//   [drift]    fem_exponent, run_lod, sample_every, snapshot_times
//   [cpu]      fem_min_exponent, fem_max_exponent, newton_steps,
//              iteration_exponents, iteration_fine_exponent, iteration_steps
//   [run]      output_dir, seed, threads

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/dynamics.hpp"

namespace gpelod::harness {

struct TimeGrid {
  double tau = 0.0;
  long long steps = 0;
};

struct ExperimentConfig {
  std::string problem = "benchmark";
  double a = -20.0;
  double b = 20.0;
  double beta = -2.0;
  std::string v1 = "zero";
  std::string v2 = "zero";
  std::string initial = "benchmark";

  std::vector<int> coarse_exponents{5, 6, 7, 8};
  int fine_exponent = 13;

  std::vector<int> layers;  // empty selects the default for each H
  double omega_tolerance = 1e-12;
  std::string cache_dir;

  std::optional<double> tau;
  std::optional<long long> steps;
  std::optional<double> final_time;
  long long observe_every = 0;

  dyn::SolverOptions solver;

  std::vector<double> tau_sweep{2e-3, 1e-3, 5e-4};
  int tau_sweep_exponent = 8;

  int drift_fem_exponent = 9;
  bool drift_run_lod = true;
  double drift_sample_every = 0.1;
  std::vector<double> drift_snapshot_times{0.0, 10.0, 20.0};

  int cpu_fem_min_exponent = 12;
  int cpu_fem_max_exponent = 20;
  int cpu_newton_steps = 2;
  std::vector<int> cpu_iteration_exponents{8, 9, 10};
  int cpu_iteration_fine_exponent = 14;
  long long cpu_iteration_steps = 20;

  std::string output_dir = "out";
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = hardware concurrency

  bool is_benchmark() const noexcept { return problem == "benchmark"; }

  // Resolves tau/steps/final_time; throws ConfigError if fewer than two are
  // given or the three disagree.
  TimeGrid time_grid() const;

  // Checks ranges and cross-field consistency.
  void validate() const;

  // "section.key = value" lines of every field, for report headers.
  std::vector<std::string> describe() const;
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& ini_text);

// Command-line overrides. tau keeps final_time (steps are re-derived);
// steps keeps tau (final_time is dropped).
struct Overrides {
  std::optional<int> coarse_exponent;
  std::optional<int> layers;
  std::optional<double> tau;
  std::optional<long long> steps;
  std::optional<std::string> output_dir;
};

void apply_overrides(ExperimentConfig& cfg, const Overrides& o);

}  // namespace gpelod::harness
