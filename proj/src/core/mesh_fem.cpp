#include "core/mesh_fem.hpp"

#include <algorithm>
#include <cmath>

namespace gpelod::fem {

using linalg::SparseMatrix;
using linalg::Triplet;

GridHierarchy::GridHierarchy(double a, double b, int coarse_elements,
                             int refinement)
    : a_(a), b_(b), n_coarse_(coarse_elements), refinement_(refinement) {
  if (!(b > a)) throw InvalidArgument("grid: require a < b");
  if (coarse_elements < 2) {
    throw InvalidArgument("grid: at least 2 coarse elements required");
  }
  if (refinement < 0 || refinement > 24) {
    throw InvalidArgument("grid: refinement exponent out of range");
  }
  if (static_cast<long long>(coarse_elements) << refinement > (1LL << 26)) {
    throw InvalidArgument("grid: fine mesh too large");
  }
}

const GaussRule& gauss4() {
  static const GaussRule rule = [] {
    const double a = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
    const double b = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
    const double wa = (18.0 + std::sqrt(30.0)) / 36.0;
    const double wb = (18.0 - std::sqrt(30.0)) / 36.0;
    GaussRule r{};
    // Map from [-1, 1] to [0, 1].
    r.points = {0.5 * (1.0 - b), 0.5 * (1.0 - a), 0.5 * (1.0 + a),
                0.5 * (1.0 + b)};
    r.weights = {0.5 * wb, 0.5 * wa, 0.5 * wa, 0.5 * wb};
    return r;
  }();
  return rule;
}

// ---------------------------------------------------------------------------
// Potential

Potential::Potential() : eval_([](double) { return 0.0; }) {}

Potential Potential::zero() { return Potential(); }

Potential Potential::constant(double c) {
  Potential p;
  p.eval_ = [c](double) { return c; };
  p.zero_ = (c == 0.0);
  p.translation_invariant_ = true;
  return p;
}

Potential Potential::from_function(std::function<double(double)> f,
                                   bool translation_invariant) {
  if (!f) throw InvalidArgument("potential: empty function");
  Potential p;
  p.eval_ = std::move(f);
  p.zero_ = false;
  p.translation_invariant_ = translation_invariant;
  return p;
}

Potential Potential::from_nodal_samples(double a, double b, RVector samples) {
  if (samples.size() < 2 || !(b > a)) {
    throw InvalidArgument("potential: need >= 2 samples on a nonempty interval");
  }
  const double h = (b - a) / static_cast<double>(samples.size() - 1);
  const auto last = static_cast<int>(samples.size()) - 2;
  Potential p;
  p.eval_ = [a, h, last, s = std::move(samples)](double x) {
    const double t = (x - a) / h;
    int e = static_cast<int>(std::floor(t));
    e = std::clamp(e, 0, last);
    const double xi = t - e;
    return (1.0 - xi) * s[e] + xi * s[e + 1];
  };
  p.zero_ = false;
  p.translation_invariant_ = false;
  return p;
}

Potential operator+(const Potential& lhs, const Potential& rhs) {
  if (lhs.is_zero()) return rhs;
  if (rhs.is_zero()) return lhs;
  Potential p;
  p.eval_ = [f = lhs.eval_, g = rhs.eval_](double x) { return f(x) + g(x); };
  p.zero_ = false;
  p.translation_invariant_ =
      lhs.translation_invariant_ && rhs.translation_invariant_;
  return p;
}

// ---------------------------------------------------------------------------
// Assembly

SparseMatrix assemble_p1_matrix(const GridHierarchy& grid, Level level,
                                MatrixKind kind, const Potential* weight) {
  if (kind == MatrixKind::weighted_mass && weight == nullptr) {
    throw InvalidArgument("weighted mass matrix requires a potential");
  }
  const int n_el = grid.elements(level);
  const int n = grid.dofs(level);
  const double h = grid.spacing(level);
  // Element matrices, indexed [local row][local col].
  std::vector<std::array<double, 4>> local(n_el);
  switch (kind) {
    case MatrixKind::mass:
      for (auto& m : local) m = {h / 3.0, h / 6.0, h / 6.0, h / 3.0};
      break;
    case MatrixKind::stiffness:
      for (auto& m : local) m = {1.0 / h, -1.0 / h, -1.0 / h, 1.0 / h};
      break;
    case MatrixKind::weighted_mass:
      for (auto& m : local) m = {0.0, 0.0, 0.0, 0.0};
      for_each_quadrature_point(
          grid, level, [&](int e, double x, double w, double pl, double pr) {
            const double v = w * (*weight)(x);
            local[e][0] += v * pl * pl;
            local[e][1] += v * pl * pr;
            local[e][2] += v * pr * pl;
            local[e][3] += v * pr * pr;
          });
      break;
  }
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(3) * n);
  for (int e = 0; e < n_el; ++e) {
    const int dofs[2] = {e - 1, e};  // DOF of node e and e + 1
    for (int r = 0; r < 2; ++r) {
      if (dofs[r] < 0 || dofs[r] >= n) continue;
      for (int c = 0; c < 2; ++c) {
        if (dofs[c] < 0 || dofs[c] >= n) continue;
        t.push_back({dofs[r], dofs[c], Complex{local[e][2 * r + c], 0.0}});
      }
    }
  }
  return SparseMatrix::from_triplets(n, n, std::move(t), true);
}

SparseMatrix assemble_a_matrix(const GridHierarchy& grid, Level level,
                               const Potential& v1) {
  auto a = assemble_p1_matrix(grid, level, MatrixKind::stiffness);
  if (v1.is_zero()) return a;
  const auto mv = assemble_p1_matrix(grid, level, MatrixKind::weighted_mass, &v1);
  return linalg::linear_combination(1.0, a, 1.0, mv);
}

CVector interpolate(const GridHierarchy& grid, Level level,
                    const std::function<Complex(double)>& f) {
  CVector u(grid.dofs(level));
  for (int d = 0; d < grid.dofs(level); ++d) u[d] = f(grid.dof_x(level, d));
  return u;
}

CVector prolong(const GridHierarchy& grid, std::span<const Complex> coarse) {
  if (coarse.size() != static_cast<std::size_t>(grid.dofs(Level::coarse))) {
    throw DimensionMismatch("prolong: coarse vector length mismatch");
  }
  const int m = grid.fine_per_coarse();
  CVector fine(grid.dofs(Level::fine));
  for (int e = 0; e < grid.coarse_elements(); ++e) {
    const Complex left = nodal_value(coarse, e);
    const Complex right = nodal_value(coarse, e + 1);
    for (int s = 0; s < m; ++s) {
      const int node = e * m + s;
      if (node == 0) continue;
      const double xi = static_cast<double>(s) / m;
      fine[node - 1] = (1.0 - xi) * left + xi * right;
    }
  }
  return fine;
}

CVector prolong_transpose(const GridHierarchy& grid,
                          std::span<const Complex> fine) {
  if (fine.size() != static_cast<std::size_t>(grid.dofs(Level::fine))) {
    throw DimensionMismatch("prolong_transpose: fine vector length mismatch");
  }
  const int m = grid.fine_per_coarse();
  const int nc = grid.dofs(Level::coarse);
  CVector coarse(nc);
  for (int e = 0; e < grid.coarse_elements(); ++e) {
    for (int s = 0; s < m; ++s) {
      const int node = e * m + s;
      if (node == 0) continue;
      const double xi = static_cast<double>(s) / m;
      const Complex v = fine[node - 1];
      if (e - 1 >= 0) coarse[e - 1] += (1.0 - xi) * v;
      if (s > 0 && e < nc) coarse[e] += xi * v;
    }
  }
  return coarse;
}

FeFunction l2_project_coarse(const GridHierarchy& grid, const FeFunction& f) {
  if (f.level != Level::fine) {
    throw InvalidArgument("l2_project_coarse expects a fine-level function");
  }
  if (f.values.size() != static_cast<std::size_t>(grid.dofs(Level::fine))) {
    throw DimensionMismatch("l2_project_coarse: vector length mismatch");
  }
  const auto mf = assemble_p1_matrix(grid, Level::fine, MatrixKind::mass);
  const CVector mfu = mf * f.values;
  CVector rhs = prolong_transpose(grid, mfu);
  const auto mc = assemble_p1_matrix(grid, Level::coarse, MatrixKind::mass);
  const auto lu = linalg::lu_factor(mc);
  lu.solve_in_place(rhs);
  return {Level::coarse, std::move(rhs)};
}

double integrate(const GridHierarchy& grid, Level level,
                 const std::function<double(double)>& f) {
  double acc = 0.0;
  for_each_quadrature_point(
      grid, level,
      [&](int, double x, double w, double, double) { acc += w * f(x); });
  return acc;
}

CVector assemble_cubic_load(const GridHierarchy& grid,
                            std::span<const Complex> a,
                            std::span<const Complex> b, double beta) {
  const int n = grid.dofs(Level::fine);
  if (a.size() != static_cast<std::size_t>(n) ||
      b.size() != static_cast<std::size_t>(n)) {
    throw DimensionMismatch("cubic load: vector length mismatch");
  }
  CVector load(n);
  if (beta == 0.0) return load;
  const auto& rule = gauss4();
  const double h = grid.fine_h();
  const int n_el = grid.fine_elements();
  for (int e = 0; e < n_el; ++e) {
    const Complex al = nodal_value(a, e), ar = nodal_value(a, e + 1);
    const Complex bl = nodal_value(b, e), br = nodal_value(b, e + 1);
    Complex to_left{};
    Complex to_right{};
    for (int q = 0; q < 4; ++q) {
      const double s = rule.points[q];
      const Complex av = (1.0 - s) * al + s * ar;
      const Complex bv = (1.0 - s) * bl + s * br;
      const Complex g = (std::norm(av) + std::norm(bv)) * (av + bv);
      const double w = rule.weights[q] * h * beta;
      to_left += w * (1.0 - s) * g;
      to_right += w * s * g;
    }
    if (e >= 1) load[e - 1] += to_left;
    if (e < n) load[e] += to_right;
  }
  return load;
}

}  // namespace gpelod::fem
