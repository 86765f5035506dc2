#pragma once

// Named potential families for configs and the C API:
//   zero | constant:c | harmonic:gamma | lattice:alpha,lambda
// harmonic is gamma^2 x^2 / 2, lattice is alpha sin^2(2 pi x / lambda).

#include <string>

#include "core/mesh_fem.hpp"

namespace gpelod::harness {

// `coarse_h` decides whether the potential is invariant under translation by
// one coarse cell (lattice period lambda/2 dividing H, or a constant).
fem::Potential parse_potential(const std::string& spec, double coarse_h);

}  // namespace gpelod::harness
