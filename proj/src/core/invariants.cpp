#include "core/invariants.hpp"

#include <cmath>
#include <limits>

namespace gpelod::inv {

using fem::GridHierarchy;
using fem::Level;

namespace {

void check_size(const GridHierarchy& grid, Level level, std::span<const Complex> u) {
  if (u.size() != static_cast<std::size_t>(grid.dofs(level))) {
    throw DimensionMismatch("invariants: state length does not match the grid");
  }
}

}  // namespace

double mass(const GridHierarchy& grid, Level level, std::span<const Complex> u) {
  check_size(grid, level, u);
  return fem::integrate(grid, level, u,
                        [](double, Complex v, Complex) { return std::norm(v); });
}

double energy(const GridHierarchy& grid, Level level, std::span<const Complex> u,
              const fem::Potential& v, double beta) {
  check_size(grid, level, u);
  const bool with_v = !v.is_zero();
  return fem::integrate(grid, level, u, [&](double x, Complex w, Complex dw) {
    const double rho = std::norm(w);
    double e = std::norm(dw) + 0.5 * beta * rho * rho;
    if (with_v) e += v(x) * rho;
    return e;
  });
}

double momentum(const GridHierarchy& grid, Level level, std::span<const Complex> u) {
  check_size(grid, level, u);
  return fem::integrate(grid, level, u, [](double, Complex w, Complex dw) {
    return 2.0 * (std::conj(w) * dw).imag();
  });
}

double center_of_mass(const GridHierarchy& grid, Level level,
                      std::span<const Complex> u) {
  check_size(grid, level, u);
  return fem::integrate(grid, level, u,
                        [](double x, Complex w, Complex) { return x * std::norm(w); });
}

double normalized_center_of_mass(const GridHierarchy& grid, Level level,
                                 std::span<const Complex> u) {
  const double m = mass(grid, level, u);
  return m > 0.0 ? center_of_mass(grid, level, u) / m : 0.0;
}

double mass(const lod::LodSpace& space, std::span<const Complex> coefficients) {
  return linalg::quadratic_form(space.mass(), coefficients).real();
}

double energy(const lod::LodSpace& space, std::span<const Complex> coefficients,
              double beta) {
  const CVector fine = space.expand(coefficients);
  return energy(space.grid(), Level::fine, fine, space.potential(), beta);
}

double momentum(const lod::LodSpace& space, std::span<const Complex> coefficients) {
  const CVector fine = space.expand(coefficients);
  return momentum(space.grid(), Level::fine, fine);
}

double center_of_mass(const lod::LodSpace& space,
                      std::span<const Complex> coefficients) {
  const CVector fine = space.expand(coefficients);
  return center_of_mass(space.grid(), Level::fine, fine);
}

double modified_energy(const lod::LodSpace& space,
                       std::span<const Complex> coefficients, double beta) {
  if (coefficients.size() != static_cast<std::size_t>(space.dim())) {
    throw DimensionMismatch("modified_energy: coefficient length mismatch");
  }
  double e = linalg::quadratic_form(space.stiffness(), coefficients).real() +
             linalg::quadratic_form(space.potential_mass(), coefficients).real();
  if (beta != 0.0) {
    const RVector rho = lod::lod_l2_project_density(space, coefficients);
    RVector m_rho(rho.size());
    space.mass().multiply_real(rho, m_rho);
    double q = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) q += rho[i] * m_rho[i];
    e += 0.5 * beta * q;
  }
  return e;
}

InvariantRecord evaluate(const GridHierarchy& grid, std::span<const Complex> fine,
                         const fem::Potential& v, double beta, double t) {
  InvariantRecord r;
  r.t = t;
  r.mass = mass(grid, Level::fine, fine);
  r.energy = energy(grid, Level::fine, fine, v, beta);
  r.energy_lod = std::numeric_limits<double>::quiet_NaN();
  r.momentum = momentum(grid, Level::fine, fine);
  r.xc = center_of_mass(grid, Level::fine, fine);
  return r;
}

InvariantRecord evaluate(const lod::LodSpace& space,
                         std::span<const Complex> coefficients, double beta, double t) {
  const CVector fine = space.expand(coefficients);
  InvariantRecord r = evaluate(space.grid(), fine, space.potential(), beta, t);
  r.energy_lod = modified_energy(space, coefficients, beta);
  return r;
}

}  // namespace gpelod::inv
