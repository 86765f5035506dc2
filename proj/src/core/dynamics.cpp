#include "core/dynamics.hpp"

#include <cmath>

namespace gpelod::dyn {

using fem::Level;
using linalg::SparseMatrix;
using linalg::Triplet;

Stepper::Stepper(Scheme scheme, std::shared_ptr<const lod::LodSpace> space,
                 fem::GridHierarchy grid, SparseMatrix mass, SparseMatrix hamiltonian,
                 double beta, double tau, const SolverOptions& options)
    : scheme_(scheme),
      space_(std::move(space)),
      grid_(grid),
      mass_(std::move(mass)),
      hamiltonian_(std::move(hamiltonian)),
      beta_(beta),
      options_(options) {
  if (!(options.tolerance > 0.0)) throw InvalidArgument("solver tolerance must be > 0");
  if (options.max_iterations < 1) throw InvalidArgument("max iterations must be >= 1");
  if (options.newton && scheme != Scheme::classical_fem) {
    throw InvalidArgument("Newton mode is only available for the fine-grid scheme");
  }
  if (!std::isfinite(beta)) throw InvalidArgument("beta must be finite");
  u_.assign(mass_.rows(), Complex{});
  set_tau(tau);
}

Stepper Stepper::modified(std::shared_ptr<const lod::LodSpace> space, double beta,
                          double tau, const SolverOptions& options) {
  if (!space) throw InvalidArgument("stepper: null LOD space");
  auto h = linalg::linear_combination(1.0, space->stiffness(), 1.0,
                                      space->potential_mass());
  return Stepper(Scheme::modified_lod, space, space->grid(), space->mass(),
                 std::move(h), beta, tau, options);
}

Stepper Stepper::classical_lod(std::shared_ptr<const lod::LodSpace> space,
                               double beta, double tau, const SolverOptions& options) {
  if (!space) throw InvalidArgument("stepper: null LOD space");
  auto h = linalg::linear_combination(1.0, space->stiffness(), 1.0,
                                      space->potential_mass());
  return Stepper(Scheme::classical_lod, space, space->grid(), space->mass(),
                 std::move(h), beta, tau, options);
}

Stepper Stepper::classical_fem(const fem::GridHierarchy& grid, const fem::Potential& v,
                               double beta, double tau, const SolverOptions& options) {
  auto m = fem::assemble_p1_matrix(grid, Level::fine, fem::MatrixKind::mass);
  auto h = fem::assemble_a_matrix(grid, Level::fine, v);
  return Stepper(Scheme::classical_fem, nullptr, grid, std::move(m), std::move(h),
                 beta, tau, options);
}

void Stepper::set_tau(double tau) {
  if (!std::isfinite(tau) || tau == 0.0) {
    throw InvalidArgument("time step must be finite and nonzero");
  }
  if (tau == tau_ && l_lu_.size() == mass_.rows()) return;
  tau_ = tau;
  const Complex half{0.0, 0.5 * tau};
  l_lu_ = linalg::lu_factor(linalg::linear_combination(1.0, mass_, half, hamiltonian_));
  l_adjoint_ = linalg::linear_combination(1.0, mass_, -half, hamiltonian_);
}

void Stepper::set_state(CVector u, double t) {
  if (u.size() != static_cast<std::size_t>(dim())) {
    throw DimensionMismatch("stepper: state length mismatch");
  }
  u_ = std::move(u);
  n_ = 0;
  t_ = t;
  stats_ = {};
}

StepStats Stepper::step() {
  StepStats s;
  CVector next = advance(u_, &s);
  u_ = std::move(next);
  ++n_;
  t_ += tau_;
  stats_ = s;
  return s;
}

double Stepper::mass_norm(std::span<const Complex> v) const {
  return std::sqrt(std::max(0.0, linalg::quadratic_form(mass_, v).real()));
}

CVector Stepper::nonlinear_term(std::span<const Complex> a,
                                std::span<const Complex> b) const {
  if (a.size() != static_cast<std::size_t>(dim()) || b.size() != a.size()) {
    throw DimensionMismatch("nonlinear term: length mismatch");
  }
  if (beta_ == 0.0) return CVector(a.size());
  switch (scheme_) {
    case Scheme::modified_lod:
      return modified_term(space_->omega().density_load(a), a, b);
    case Scheme::classical_lod: {
      const CVector fa = space_->expand(a);
      const CVector fb = space_->expand(b);
      return space_->restrict_load(fem::assemble_cubic_load(grid_, fa, fb, beta_));
    }
    case Scheme::classical_fem:
      return fem::assemble_cubic_load(grid_, a, b, beta_);
  }
  return {};
}

CVector Stepper::modified_term(const RVector& load_a, std::span<const Complex> a,
                               std::span<const Complex> b) const {
  RVector rho = space_->omega().density_load(b);
  for (std::size_t i = 0; i < rho.size(); ++i) rho[i] += load_a[i];
  space_->mass_lu().solve_in_place(rho);
  CVector s(a.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = a[i] + b[i];
  CVector out = space_->omega().contract(rho, s);
  for (auto& v : out) v *= beta_;
  return out;
}

CVector Stepper::advance(std::span<const Complex> u, StepStats* stats) const {
  if (u.size() != static_cast<std::size_t>(dim())) {
    throw DimensionMismatch("stepper: state length mismatch");
  }
  CVector base = l_adjoint_ * u;
  l_lu_.solve_in_place(base);
  if (beta_ == 0.0) {
    if (stats) *stats = {1, 0.0};
    return base;
  }
  if (options_.newton) return advance_newton(u, stats);

  const Complex factor{0.0, -0.25 * tau_};
  // The density load of u^n is the same in every iteration.
  RVector load_u;
  if (scheme_ == Scheme::modified_lod) load_u = space_->omega().density_load(u);
  CVector x(u.begin(), u.end());
  CVector next(x.size());
  CVector diff(x.size());
  double res = 0.0;
  for (int it = 1; it <= options_.max_iterations; ++it) {
    CVector g = scheme_ == Scheme::modified_lod ? modified_term(load_u, u, x)
                                                : nonlinear_term(u, x);
    l_lu_.solve_in_place(g);
    for (std::size_t i = 0; i < x.size(); ++i) {
      next[i] = base[i] + factor * g[i];
      diff[i] = next[i] - x[i];
    }
    res = mass_norm(diff);
    x.swap(next);
    if (!std::isfinite(res)) break;
    if (res <= options_.tolerance) {
      if (stats) *stats = {it, res};
      return x;
    }
  }
  throw NotConverged("fixed-point iteration did not converge; reduce the time step",
                     options_.max_iterations, res);
}

// Newton on F(X) = L X - L* u + (i tau / 4) N(u, X), written as a real
// system in interleaved (Re, Im) unknowns because N is not complex-linear.
CVector Stepper::advance_newton(std::span<const Complex> u, StepStats* stats) const {
  const int n = dim();
  const auto& rule = fem::gauss4();
  const double h = grid_.fine_h();
  const Complex half{0.0, 0.5 * tau_};
  const SparseMatrix l = linalg::linear_combination(1.0, mass_, half, hamiltonian_);
  const CVector lsu = l_adjoint_ * u;
  const Complex quarter{0.0, 0.25 * tau_};

  std::vector<Triplet> base;
  base.reserve(static_cast<std::size_t>(12) * n);
  {
    const auto rp = l.row_ptr();
    const auto ci = l.col_index();
    const auto v = l.values();
    for (int r = 0; r < n; ++r) {
      for (int p = rp[r]; p < rp[r + 1]; ++p) {
        const int c = ci[p];
        const double re = v[p].real();
        const double im = v[p].imag();
        base.push_back({2 * r, 2 * c, re});
        base.push_back({2 * r, 2 * c + 1, -im});
        base.push_back({2 * r + 1, 2 * c, im});
        base.push_back({2 * r + 1, 2 * c + 1, re});
      }
    }
  }

  CVector x(u.begin(), u.end());
  double res = 0.0;
  for (int it = 1; it <= options_.max_iterations; ++it) {
    CVector f = l * x;
    const CVector g = nonlinear_term(u, x);
    for (int i = 0; i < n; ++i) f[i] += quarter * g[i] - lsu[i];

    std::vector<Triplet> t = base;
    for (int e = 0; e < grid_.fine_elements(); ++e) {
      const int d[2] = {e - 1, e};
      const Complex al = fem::nodal_value(u, e), ar = fem::nodal_value(u, e + 1);
      const Complex xl = fem::nodal_value<Complex>(x, e);
      const Complex xr = fem::nodal_value<Complex>(x, e + 1);
      double blk[2][2][4] = {};  // [p][l][rr, ri, ir, ii]
      for (int q = 0; q < 4; ++q) {
        const double s = rule.points[q];
        const double phi[2] = {1.0 - s, s};
        const Complex av = phi[0] * al + phi[1] * ar;
        const Complex xv = phi[0] * xl + phi[1] * xr;
        const Complex c = av + xv;
        const double m2 = std::norm(av) + std::norm(xv);
        const double w = rule.weights[q] * h * beta_;
        const double jrr = m2 + 2.0 * c.real() * xv.real();
        const double jri = 2.0 * c.real() * xv.imag();
        const double jir = 2.0 * c.imag() * xv.real();
        const double jii = m2 + 2.0 * c.imag() * xv.imag();
        for (int p = 0; p < 2; ++p) {
          for (int k = 0; k < 2; ++k) {
            const double ww = w * phi[p] * phi[k];
            blk[p][k][0] += ww * jrr;
            blk[p][k][1] += ww * jri;
            blk[p][k][2] += ww * jir;
            blk[p][k][3] += ww * jii;
          }
        }
      }
      const double qt = 0.25 * tau_;
      for (int p = 0; p < 2; ++p) {
        if (d[p] < 0 || d[p] >= n) continue;
        for (int k = 0; k < 2; ++k) {
          if (d[k] < 0 || d[k] >= n) continue;
          const double* b = blk[p][k];
          // Re row gets -tau/4 * dN_im, Im row gets +tau/4 * dN_re.
          t.push_back({2 * d[p], 2 * d[k], -qt * b[2]});
          t.push_back({2 * d[p], 2 * d[k] + 1, -qt * b[3]});
          t.push_back({2 * d[p] + 1, 2 * d[k], qt * b[0]});
          t.push_back({2 * d[p] + 1, 2 * d[k] + 1, qt * b[1]});
        }
      }
    }
    const auto jac = linalg::lu_factor_real(
        SparseMatrix::from_triplets(2 * n, 2 * n, std::move(t), false));
    RVector rhs(2 * static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      rhs[2 * i] = -f[i].real();
      rhs[2 * i + 1] = -f[i].imag();
    }
    jac.solve_in_place(rhs);
    CVector delta(n);
    for (int i = 0; i < n; ++i) {
      delta[i] = {rhs[2 * i], rhs[2 * i + 1]};
      x[i] += delta[i];
    }
    res = mass_norm(delta);
    if (!std::isfinite(res)) break;
    if (res <= options_.tolerance) {
      if (stats) *stats = {it, res};
      return x;
    }
  }
  throw NotConverged("Newton iteration did not converge; reduce the time step",
                     options_.max_iterations, res);
}

Trajectory evolve(Stepper& stepper, long long steps, long long stride,
                  const Observer& observer) {
  if (steps < 0) throw InvalidArgument("evolve: negative step count");
  if (stride < 0) throw InvalidArgument("evolve: negative observer stride");
  Trajectory tr;
  tr.iterations.reserve(static_cast<std::size_t>(steps));
  if (observer) observer(stepper.step_index(), stepper.time(), stepper.state());
  for (long long s = 1; s <= steps; ++s) {
    try {
      tr.iterations.push_back(stepper.step().iterations);
    } catch (const NotConverged& e) {
      tr.failure = e.what();
      if (observer) observer(stepper.step_index(), stepper.time(), stepper.state());
      return tr;
    }
    ++tr.steps_done;
    const bool last = s == steps;
    if (observer && (last || (stride > 0 && s % stride == 0))) {
      observer(stepper.step_index(), stepper.time(), stepper.state());
    }
  }
  return tr;
}

}  // namespace gpelod::dyn
