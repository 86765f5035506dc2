#pragma once

// Dense references for LOD constructions: the global saddle-point basis and
// one modified Crank-Nicolson step. Only grid geometry and basis expansion
// are taken from the library.

#include "core/lod.hpp"
#include "oracles.hpp"

namespace oracle {

using gpelod::CVector;
using gpelod::fem::GridHierarchy;
using gpelod::fem::Level;

// Ideal (global) corrected hats from the dense saddle-point system
//   [A  C^T] [q]   [-A phi_c]
//   [C  0  ] [l] = [   0    ],
// with A = K + v1 M on the fine grid and C_cf = <phi_H_c, phi_h_f>; every
// matrix is built here from closed-form P1 entries.
inline std::vector<std::vector<Complex>> ideal_basis(const GridHierarchy& g, double v1) {
  const int nf = g.dofs(Level::fine);
  const int nc = g.dofs(Level::coarse);
  const double h = g.fine_h();
  Dense<double> a(nf, nf), mf(nf, nf);
  for (int i = 0; i < nf; ++i) {
    mf(i, i) = 2.0 * h / 3.0;
    a(i, i) = 2.0 / h + v1 * mf(i, i);
    if (i + 1 < nf) {
      mf(i, i + 1) = mf(i + 1, i) = h / 6.0;
      a(i, i + 1) = a(i + 1, i) = -1.0 / h + v1 * h / 6.0;
    }
  }
  // Coarse hats sampled at fine nodes.
  Dense<double> hat(nc, nf);
  for (int c = 0; c < nc; ++c) {
    const double xc = g.dof_x(Level::coarse, c);
    for (int f = 0; f < nf; ++f) {
      hat(c, f) = std::max(0.0, 1.0 - std::abs(g.dof_x(Level::fine, f) - xc) / g.coarse_h());
    }
  }
  Dense<double> cm(nc, nf);
  for (int c = 0; c < nc; ++c) {
    for (int f = 0; f < nf; ++f) {
      double s = 0.0;
      for (int k = 0; k < nf; ++k) s += hat(c, k) * mf(k, f);
      cm(c, f) = s;
    }
  }
  std::vector<std::vector<Complex>> out;
  const int n = nf + nc;
  for (int c = 0; c < nc; ++c) {
    Dense<double> kkt(n, n);
    std::vector<double> rhs(n, 0.0);
    for (int i = 0; i < nf; ++i) {
      for (int j = 0; j < nf; ++j) {
        kkt(i, j) = a(i, j);
        rhs[i] -= a(i, j) * hat(c, j);
      }
      for (int r = 0; r < nc; ++r) kkt(i, nf + r) = kkt(nf + r, i) = cm(r, i);
    }
    const auto sol = solve(kkt, rhs);
    std::vector<Complex> phi(nf);
    for (int f = 0; f < nf; ++f) phi[f] = hat(c, f) + sol[f];
    out.push_back(phi);
  }
  return out;
}

// int phi_k phi_j phi_i for fine P1 vectors; two Simpson panels per element
// integrate the cubic exactly.
inline double triple_product(const GridHierarchy& g, const std::vector<Complex>& pk,
                             const std::vector<Complex>& pj, const std::vector<Complex>& pi) {
  double acc = 0.0;
  const double h = g.fine_h();
  for (int e = 0; e < g.fine_elements(); ++e) {
    for (int q = 0; q <= 2; ++q) {
      const double s = 0.5 * q;
      const double w = q == 1 ? 4.0 : 1.0;
      acc += w * h / 6.0 * (p1_value(pk, e, s) * p1_value(pj, e, s) * p1_value(pi, e, s)).real();
    }
  }
  return acc;
}

inline std::vector<std::vector<Complex>> basis_vectors(const gpelod::lod::LodSpace& s) {
  std::vector<std::vector<Complex>> phi(s.dim());
  for (int i = 0; i < s.dim(); ++i) {
    CVector e(s.dim());
    e[i] = 1.0;
    phi[i] = s.expand(e);
  }
  return phi;
}

// Dense reference for one modified step. Basis functions are taken as fine
// P1 vectors; M, A and the triple products are integrated independently.
struct DenseModified {
  int n = 0;
  Dense<Complex> m{0, 0}, a{0, 0};
  std::vector<double> w;  // w[(k * n + j) * n + i] = int phi_k phi_j phi_i

  explicit DenseModified(const gpelod::lod::LodSpace& s)
      : n(s.dim()), m(n, n), a(n, n), w(static_cast<std::size_t>(n) * n * n) {
    const auto& g = s.grid();
    const auto phi = basis_vectors(s);
    const double h = g.fine_h();
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        double mass = 0.0, stiff = 0.0;
        for (int e = 0; e < g.fine_elements(); ++e) {
          const double l0 = p1_value(phi[i], e, 0.0).real(), l1 = p1_value(phi[i], e, 1.0).real();
          const double r0 = p1_value(phi[j], e, 0.0).real(), r1 = p1_value(phi[j], e, 1.0).real();
          mass += h / 6.0 * (2.0 * l0 * r0 + l0 * r1 + l1 * r0 + 2.0 * l1 * r1);
          stiff += h * p1_slope(phi[i], e, h).real() * p1_slope(phi[j], e, h).real();
        }
        m(i, j) = mass;
        a(i, j) = stiff;
      }
    }
    for (int k = 0; k < n; ++k) {
      for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) w[(k * n + j) * n + i] = triple_product(g, phi[k], phi[j], phi[i]);
      }
    }
  }

  std::vector<Complex> density_coefficients(const std::vector<Complex>& u) const {
    std::vector<Complex> load(n);
    for (int k = 0; k < n; ++k) {
      Complex s{};
      for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) s += w[(k * n + j) * n + i] * std::conj(u[j]) * u[i];
      }
      load[k] = s.real();
    }
    return solve(m, load);
  }

  // beta int P(|a|^2 + |b|^2) (a + b) phi_i
  std::vector<Complex> nonlinear(const std::vector<Complex>& x, const std::vector<Complex>& y,
                                 double beta) const {
    const auto ra = density_coefficients(x), rb = density_coefficients(y);
    std::vector<Complex> out(n);
    for (int i = 0; i < n; ++i) {
      Complex s{};
      for (int k = 0; k < n; ++k) {
        for (int j = 0; j < n; ++j) s += w[(k * n + j) * n + i] * (ra[k] + rb[k]) * (x[j] + y[j]);
      }
      out[i] = beta * s;
    }
    return out;
  }

  // Residual of L X - L* U + (i tau / 4) N(U, X).
  std::vector<Complex> residual(const std::vector<Complex>& u, const std::vector<Complex>& x,
                                double beta, double tau) const {
    const auto nl = nonlinear(u, x, beta);
    std::vector<Complex> r(n);
    const Complex half{0.0, 0.5 * tau};
    for (int i = 0; i < n; ++i) {
      Complex s = Complex{0.0, 0.25 * tau} * nl[i];
      for (int j = 0; j < n; ++j) {
        s += (m(i, j) + half * a(i, j)) * x[j] - (m(i, j) - half * a(i, j)) * u[j];
      }
      r[i] = s;
    }
    return r;
  }

  // Damped Newton with a finite-difference Jacobian in real unknowns.
  std::vector<Complex> step(const std::vector<Complex>& u, double beta, double tau) const {
    std::vector<Complex> x = u;
    for (int it = 0; it < 30; ++it) {
      const auto r = residual(u, x, beta, tau);
      double rn = 0.0;
      for (const auto& v : r) rn += std::norm(v);
      if (std::sqrt(rn) < 1e-14) break;
      Dense<double> jac(2 * n, 2 * n);
      const double d = 1e-7;
      for (int c = 0; c < 2 * n; ++c) {
        auto xp = x;
        xp[c / 2] += (c % 2 == 0) ? Complex{d, 0.0} : Complex{0.0, d};
        const auto rp = residual(u, xp, beta, tau);
        for (int q = 0; q < n; ++q) {
          jac(2 * q, c) = (rp[q] - r[q]).real() / d;
          jac(2 * q + 1, c) = (rp[q] - r[q]).imag() / d;
        }
      }
      std::vector<double> rhs(2 * n);
      for (int q = 0; q < n; ++q) {
        rhs[2 * q] = -r[q].real();
        rhs[2 * q + 1] = -r[q].imag();
      }
      const auto dx = solve(jac, rhs);
      for (int q = 0; q < n; ++q) x[q] += Complex(dx[2 * q], dx[2 * q + 1]);
    }
    return x;
  }
};

}  // namespace oracle
