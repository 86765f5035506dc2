#include "core/benchmark.hpp"

#include <cmath>
#include <limits>

namespace gpelod::bench {

fem::PotentialSplit benchmark_split() {
  return {fem::Potential::zero(), fem::Potential::zero(), BenchmarkProblem{}.beta};
}

namespace {

// Numerator and denominator scaled by exp(-6|x|) so nothing overflows, with
// their x-derivatives. ek = exp(-k|x|).
struct Scaled {
  Complex num, dnum;
  double den, dden;
};

Scaled scaled_parts(double x, double t) {
  const Complex p4 = std::exp(Complex{0.0, 4.0 * t});
  const Complex p16 = std::exp(Complex{0.0, 16.0 * t});
  const double c12 = std::cos(12.0 * t);
  const double y = std::abs(x);
  const double e2 = std::exp(-2.0 * y);
  const double e4 = e2 * e2;
  const double e6 = e4 * e2;
  const double e8 = e4 * e4;
  const double e10 = e8 * e2;
  const double e12 = e6 * e6;
  Scaled s;
  if (x >= 0.0) {
    s.num = 8.0 * p4 * (9.0 * e10 + 16.0 * e2) - 32.0 * p16 * (4.0 * e8 + 9.0 * e4);
    s.den = -128.0 * c12 * e6 + 4.0 * e12 + 16.0 + 81.0 * e8 + 64.0 * e4;
    s.dnum = 8.0 * p4 * (-90.0 * e10 - 32.0 * e2) -
             32.0 * p16 * (-32.0 * e8 - 36.0 * e4);
    s.dden = 768.0 * c12 * e6 - 48.0 * e12 - 648.0 * e8 - 256.0 * e4;
  } else {
    s.num = 8.0 * p4 * (9.0 * e2 + 16.0 * e10) - 32.0 * p16 * (4.0 * e4 + 9.0 * e8);
    s.den = -128.0 * c12 * e6 + 4.0 + 16.0 * e12 + 81.0 * e4 + 64.0 * e8;
    s.dnum = 8.0 * p4 * (18.0 * e2 + 160.0 * e10) -
             32.0 * p16 * (16.0 * e4 + 72.0 * e8);
    s.dden = -768.0 * c12 * e6 + 192.0 * e12 + 324.0 * e4 + 512.0 * e8;
  }
  return s;
}

}  // namespace

Complex exact_solution(double x, double t) {
  const Scaled s = scaled_parts(x, t);
  return s.num / s.den;
}

Complex exact_solution_dx(double x, double t) {
  const Scaled s = scaled_parts(x, t);
  return (s.dnum * s.den - s.num * s.dden) / (s.den * s.den);
}

inv::InvariantRecord exact_invariants(const fem::GridHierarchy& grid, double t) {
  const double beta = BenchmarkProblem{}.beta;
  inv::InvariantRecord r;
  r.t = t;
  r.energy_lod = std::numeric_limits<double>::quiet_NaN();
  fem::for_each_quadrature_point(
      grid, fem::Level::fine, [&](int, double x, double w, double, double) {
        const Complex u = exact_solution(x, t);
        const Complex du = exact_solution_dx(x, t);
        const double rho = std::norm(u);
        r.mass += w * rho;
        r.energy += w * (std::norm(du) + 0.5 * beta * rho * rho);
        r.momentum += w * 2.0 * (std::conj(u) * du).imag();
        r.xc += w * x * rho;
      });
  return r;
}

Complex single_soliton(double x, double t, double alpha, double c) {
  if (!(alpha > 0.0)) throw InvalidArgument("single_soliton: alpha must be > 0");
  const double s = std::sqrt(alpha);
  const double phase = 0.5 * c * x - (0.25 * c * c - alpha) * t;
  return s * std::exp(Complex{0.0, phase}) / std::cosh(s * (x - c * t));
}

DriftVelocities drift_velocities(double energy_offset) {
  if (energy_offset < 0.0 || !std::isfinite(energy_offset)) {
    throw InvalidArgument("drift_velocities: energy offset must be >= 0");
  }
  const double c2 = std::sqrt(energy_offset / 6.0);
  return {2.0 * c2, c2};
}

CVector exact_interpolant(const fem::GridHierarchy& grid, double t) {
  return fem::interpolate(grid, fem::Level::fine,
                          [t](double x) { return exact_solution(x, t); });
}

ErrorNorms error_norms(const fem::GridHierarchy& grid, std::span<const Complex> fine,
                       double t) {
  if (fine.size() != static_cast<std::size_t>(grid.dofs(fem::Level::fine))) {
    throw DimensionMismatch("error_norms: state length mismatch");
  }
  const CVector ref = exact_interpolant(grid, t);
  CVector diff(ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) diff[i] = ref[i] - fine[i];
  const auto m = fem::assemble_p1_matrix(grid, fem::Level::fine, fem::MatrixKind::mass);
  const auto a =
      fem::assemble_p1_matrix(grid, fem::Level::fine, fem::MatrixKind::stiffness);
  auto ratio = [&](const linalg::SparseMatrix& k) {
    const double den = linalg::quadratic_form(k, ref).real();
    const double num = linalg::quadratic_form(k, diff).real();
    return std::sqrt(std::max(0.0, num) / den);
  };
  return {ratio(m), ratio(a)};
}

ErrorNorms error_norms(const lod::LodSpace& space,
                       std::span<const Complex> coefficients, double t) {
  const CVector fine = space.expand(coefficients);
  return error_norms(space.grid(), fine, t);
}

}  // namespace gpelod::bench
