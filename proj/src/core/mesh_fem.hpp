#pragma once

// Nested uniform interval meshes, P1 assembly with homogeneous Dirichlet
// conditions, 4-point Gauss quadrature and the coarse L2 projection.

#include <array>
#include <functional>
#include <memory>
#include <span>

#include "core/common.hpp"
#include "core/linalg.hpp"

namespace gpelod::fem {

enum class Level { coarse, fine };

// Coarse mesh with N elements on [a, b], each split dyadically into 2^r fine
// elements. Degrees of freedom are the interior nodes; DOF d sits on node
// d + 1.
class GridHierarchy {
 public:
  GridHierarchy(double a, double b, int coarse_elements, int refinement);

  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }
  double length() const noexcept { return b_ - a_; }

  int coarse_elements() const noexcept { return n_coarse_; }
  int refinement() const noexcept { return refinement_; }
  int fine_per_coarse() const noexcept { return 1 << refinement_; }
  int fine_elements() const noexcept { return n_coarse_ << refinement_; }
  int elements(Level level) const noexcept {
    return level == Level::coarse ? coarse_elements() : fine_elements();
  }
  int dofs(Level level) const noexcept { return elements(level) - 1; }

  double coarse_h() const noexcept { return length() / n_coarse_; }
  double fine_h() const noexcept { return length() / fine_elements(); }
  double spacing(Level level) const noexcept {
    return level == Level::coarse ? coarse_h() : fine_h();
  }

  double node_x(Level level, int node) const noexcept {
    return a_ + node * spacing(level);
  }
  double dof_x(Level level, int dof) const noexcept {
    return node_x(level, dof + 1);
  }
  int coarse_to_fine_node(int coarse_node) const noexcept {
    return coarse_node << refinement_;
  }

  bool operator==(const GridHierarchy&) const = default;

 private:
  double a_;
  double b_;
  int n_coarse_;
  int refinement_;
};

struct GaussRule {
  std::array<double, 4> points;   // on [0, 1]
  std::array<double, 4> weights;  // sum to 1
};
const GaussRule& gauss4();

// Visits every quadrature point of every element on `level`.
// f(element, x, weight, phi_left, phi_right), where weight already carries
// the element length and phi_* are the two local hat values.
template <class F>
void for_each_quadrature_point(const GridHierarchy& grid, Level level, F&& f) {
  const auto& rule = gauss4();
  const double h = grid.spacing(level);
  const int n = grid.elements(level);
  for (int e = 0; e < n; ++e) {
    const double x0 = grid.node_x(level, e);
    for (int q = 0; q < 4; ++q) {
      const double s = rule.points[q];
      f(e, x0 + s * h, rule.weights[q] * h, 1.0 - s, s);
    }
  }
}

// Nodal value of an interior-DOF vector, zero on the boundary nodes.
template <class T>
inline T nodal_value(std::span<const T> u, int node) {
  const int d = node - 1;
  return (d >= 0 && d < static_cast<int>(u.size())) ? u[d] : T{};
}

// A real potential evaluated at quadrature points. Either a closure or
// piecewise-linear nodal samples on a uniform grid over [a, b].
class Potential {
 public:
  Potential();  // identically zero

  static Potential zero();
  static Potential constant(double c);
  // `translation_invariant` asserts that V(x + H) = V(x) for the coarse
  // mesh the potential will be used with.
  static Potential from_function(std::function<double(double)> f,
                                 bool translation_invariant = false);
  static Potential from_nodal_samples(double a, double b, RVector samples);

  double operator()(double x) const { return eval_(x); }
  bool is_zero() const noexcept { return zero_; }
  bool translation_invariant() const noexcept { return translation_invariant_; }

  friend Potential operator+(const Potential& lhs, const Potential& rhs);

 private:
  std::function<double(double)> eval_;
  bool zero_ = true;
  bool translation_invariant_ = true;
};

// V = v1 + v2 with v1 >= 0 entering the inner product a(., .).
struct PotentialSplit {
  Potential v1;
  Potential v2;
  double beta = 0.0;

  Potential total() const { return v1 + v2; }
};

struct FeFunction {
  Level level = Level::fine;
  CVector values;
};

enum class MatrixKind { mass, stiffness, weighted_mass };

// Real symmetric P1 matrix on interior DOFs. `weight` is required for
// weighted_mass and ignored otherwise.
linalg::SparseMatrix assemble_p1_matrix(const GridHierarchy& grid, Level level,
                                        MatrixKind kind,
                                        const Potential* weight = nullptr);

// Stiffness plus the v1-weighted mass: the Gram matrix of a(., .).
linalg::SparseMatrix assemble_a_matrix(const GridHierarchy& grid, Level level,
                                       const Potential& v1);

CVector interpolate(const GridHierarchy& grid, Level level,
                    const std::function<Complex(double)>& f);

// Coarse nodal embedding into the fine grid (linear interpolation).
CVector prolong(const GridHierarchy& grid, std::span<const Complex> coarse);
// Transpose of `prolong`.
CVector prolong_transpose(const GridHierarchy& grid,
                          std::span<const Complex> fine);

// L2 projection onto the coarse P1 space.
FeFunction l2_project_coarse(const GridHierarchy& grid, const FeFunction& f);

// Gauss quadrature of f(x, u(x), u'(x)) for a fine- or coarse-level P1
// function u; the result type follows f.
template <class F>
auto integrate(const GridHierarchy& grid, Level level,
               std::span<const Complex> u, F&& f) {
  using R = decltype(f(0.0, Complex{}, Complex{}));
  R acc{};
  const double h = grid.spacing(level);
  Complex left{};
  Complex right{};
  Complex slope{};
  int current = -1;
  for_each_quadrature_point(grid, level,
                            [&](int e, double x, double w, double pl, double pr) {
                              if (e != current) {
                                current = e;
                                left = nodal_value(u, e);
                                right = nodal_value(u, e + 1);
                                slope = (right - left) / h;
                              }
                              acc += w * f(x, pl * left + pr * right, slope);
                            });
  return acc;
}

// Quadrature of a plain function of x over the domain.
double integrate(const GridHierarchy& grid, Level level,
                 const std::function<double(double)>& f);

// Load vector <beta (|a|^2 + |b|^2)(a + b), phi_p> over fine hat functions.
CVector assemble_cubic_load(const GridHierarchy& grid,
                            std::span<const Complex> a,
                            std::span<const Complex> b, double beta);

}  // namespace gpelod::fem
