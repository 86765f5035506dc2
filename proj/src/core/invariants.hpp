#pragma once

// Mass, energy, momentum and center of mass of P1 states, plus the modified
// energy that the projected-density scheme conserves exactly.

#include <span>

#include "core/lod.hpp"
#include "core/mesh_fem.hpp"

namespace gpelod::inv {

struct InvariantRecord {
  double t = 0.0;
  double mass = 0.0;
  double energy = 0.0;
  double energy_lod = 0.0;  // NaN for states outside an LOD space
  double momentum = 0.0;
  double xc = 0.0;
};

// Functionals of a P1 state given by interior-DOF values on `level`.
double mass(const fem::GridHierarchy& grid, fem::Level level,
            std::span<const Complex> u);
double energy(const fem::GridHierarchy& grid, fem::Level level,
              std::span<const Complex> u, const fem::Potential& v, double beta);
double momentum(const fem::GridHierarchy& grid, fem::Level level,
                std::span<const Complex> u);
double center_of_mass(const fem::GridHierarchy& grid, fem::Level level,
                      std::span<const Complex> u);
// X_c / M, zero for the zero state.
double normalized_center_of_mass(const fem::GridHierarchy& grid, fem::Level level,
                                 std::span<const Complex> u);

// Same functionals for LOD coefficients; they agree with the fine-grid
// values of Phi U.
double mass(const lod::LodSpace& space, std::span<const Complex> coefficients);
double energy(const lod::LodSpace& space, std::span<const Complex> coefficients,
              double beta);
double momentum(const lod::LodSpace& space, std::span<const Complex> coefficients);
double center_of_mass(const lod::LodSpace& space,
                      std::span<const Complex> coefficients);

// Quadratic part with the full potential plus (beta/2) rho^T M rho, where
// rho are the coefficients of P_LOD(|u|^2).
double modified_energy(const lod::LodSpace& space,
                       std::span<const Complex> coefficients, double beta);

InvariantRecord evaluate(const fem::GridHierarchy& grid, std::span<const Complex> fine,
                         const fem::Potential& v, double beta, double t);
InvariantRecord evaluate(const lod::LodSpace& space,
                         std::span<const Complex> coefficients, double beta, double t);

}  // namespace gpelod::inv
