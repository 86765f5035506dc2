#pragma once

// The five experiment drivers. Sweep points run on a small worker pool and
// are merged in parameter order; a failing point is recorded in
// RunReport::failures and the sweep continues. Each driver also fills
// RunReport::checks with its pass/fail assertions.

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "core/lod.hpp"
#include "harness/config.hpp"
#include "harness/report.hpp"

namespace gpelod::harness {

struct ProblemSetup {
  fem::GridHierarchy grid;
  fem::PotentialSplit split;
  std::function<Complex(double)> initial;
  bool benchmark = false;
};

// Grid with H = (b - a) / 2^coarse_exp and h = (b - a) / 2^fine_exp.
ProblemSetup make_setup(const ExperimentConfig& cfg, int coarse_exp, int fine_exp);

struct SpaceBuild {
  std::shared_ptr<const lod::LodSpace> space;
  double wall_ms = 0.0;
  bool from_cache = false;
};

// Builds (or loads from cfg.cache_dir) the LOD space; layers 0 means auto.
SpaceBuild build_space(const ExperimentConfig& cfg, const ProblemSetup& setup, int layers);

// log2 of consecutive error ratios: order[i] from errors[i], errors[i + 1],
// scaled by the parameter ratio log2(param[i] / param[i + 1]).
double observed_order(double err_coarse, double err_fine, double param_ratio = 2.0);
double median(std::vector<double> v);

// Smallest index i such that every value from i on lies within `rel` of the
// last value.
std::size_t saturation_index(const std::vector<double>& errors, double rel = 0.1);

// Local maxima of a sampled density above `threshold`, with parabolic
// refinement: (position, height), sorted by height, largest first.
std::vector<std::pair<double, double>> density_peaks(const std::vector<double>& x,
                                                     const std::vector<double>& density,
                                                     double threshold);

// Least-squares slope of y(t).
double fit_slope(const std::vector<double>& t, const std::vector<double>& y);

RunReport run_invariant_convergence(const ExperimentConfig& cfg);
RunReport run_locality_decay(const ExperimentConfig& cfg);
RunReport run_time_convergence(const ExperimentConfig& cfg);
RunReport run_long_time_drift(const ExperimentConfig& cfg);
RunReport run_cpu_comparison(const ExperimentConfig& cfg);

const std::vector<std::string>& experiment_names();
RunReport run_experiment(const std::string& name, const ExperimentConfig& cfg);

}  // namespace gpelod::harness
