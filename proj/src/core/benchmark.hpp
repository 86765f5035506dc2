#pragma once

// Two-soliton benchmark on [-20, 20]: i u_t = -u'' - 2|u|^2 u, i.e. beta = -2
// with V = 0. The exact solution is time periodic with period pi/2 and its
// density with period pi/6; M = 12, E = -48, P = 0.

#include <span>

#include "core/invariants.hpp"
#include "core/lod.hpp"
#include "core/mesh_fem.hpp"

namespace gpelod::bench {

struct BenchmarkProblem {
  double a = -20.0;
  double b = 20.0;
  double beta = -2.0;
  double mass = 12.0;
  double energy = -48.0;
  double momentum = 0.0;
  double center_of_mass = -1.3862943611198906;  // -ln 4, unnormalized
};

fem::PotentialSplit benchmark_split();

Complex exact_solution(double x, double t);
// d/dx of exact_solution.
Complex exact_solution_dx(double x, double t);

// Invariants of the continuous exact solution, by Gauss quadrature of u and
// u' on the fine elements of `grid` (no P1 interpolation involved).
inv::InvariantRecord exact_invariants(const fem::GridHierarchy& grid, double t);

// sqrt(alpha) exp(i(c x / 2 - (c^2/4 - alpha) t)) sech(sqrt(alpha)(x - c t))
Complex single_soliton(double x, double t, double alpha, double c);

struct DriftVelocities {
  double c1 = 0.0;  // the lighter soliton (alpha = 4)
  double c2 = 0.0;
};
// |c2| = sqrt(eps / 6), |c1| = 2 |c2|.
DriftVelocities drift_velocities(double energy_offset);

// Nodal interpolant of the exact solution at time t on the fine grid.
CVector exact_interpolant(const fem::GridHierarchy& grid, double t);

struct ErrorNorms {
  double l2 = 0.0;  // relative L2 error
  double h1 = 0.0;  // relative H1-seminorm error
};
ErrorNorms error_norms(const fem::GridHierarchy& grid, std::span<const Complex> fine,
                       double t);
ErrorNorms error_norms(const lod::LodSpace& space,
                       std::span<const Complex> coefficients, double t);

}  // namespace gpelod::bench
