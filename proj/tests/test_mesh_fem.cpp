#include <doctest.h>

#include "core/mesh_fem.hpp"
#include "oracles.hpp"

using namespace gpelod;
using fem::GridHierarchy;
using fem::Level;

TEST_SUITE("mesh_fem") {
  TEST_CASE("grid geometry") {
    const GridHierarchy g(-20.0, 20.0, 8, 3);
    CHECK(g.coarse_h() == 5.0);
    CHECK(g.fine_h() == 0.625);
    CHECK(g.fine_elements() == 64);
    CHECK(g.dofs(Level::coarse) == 7);
    CHECK(g.dofs(Level::fine) == 63);
    CHECK(g.dof_x(Level::fine, 0) == -19.375);
    CHECK(g.coarse_to_fine_node(3) == 24);
    CHECK_THROWS_AS(GridHierarchy(1.0, 1.0, 4, 1), InvalidArgument);
    CHECK_THROWS_AS(GridHierarchy(0.0, 1.0, 0, 1), InvalidArgument);
  }

  TEST_CASE("mass and stiffness entries have the closed P1 form") {
    const GridHierarchy g(0.0, 2.0, 4, 2);
    const double h = g.fine_h();
    const auto m = fem::assemble_p1_matrix(g, Level::fine, fem::MatrixKind::mass);
    const auto a = fem::assemble_p1_matrix(g, Level::fine, fem::MatrixKind::stiffness);
    const int n = g.dofs(Level::fine);
    for (int i = 0; i < n; ++i) {
      CHECK(m.entry(i, i).real() == doctest::Approx(2.0 * h / 3.0));
      CHECK(a.entry(i, i).real() == doctest::Approx(2.0 / h));
      if (i + 1 < n) {
        CHECK(m.entry(i, i + 1).real() == doctest::Approx(h / 6.0));
        CHECK(a.entry(i, i + 1).real() == doctest::Approx(-1.0 / h));
      }
    }
    CHECK(m.lower_bandwidth() == 1);
    CHECK(m.upper_bandwidth() == 1);
  }

  TEST_CASE("weighted mass matches refined quadrature of hat products") {
    const GridHierarchy g(-1.0, 1.0, 4, 2);
    const auto v = fem::Potential::from_function([](double x) { return 1.0 + x * x * x * x; });
    const auto mv = fem::assemble_p1_matrix(g, Level::fine, fem::MatrixKind::weighted_mass, &v);
    const int n = g.dofs(Level::fine);
    for (int i = 0; i < n; ++i) {
      for (int j = std::max(0, i - 1); j <= std::min(n - 1, i + 1); ++j) {
        std::vector<Complex> ei(n), ej(n);
        ei[i] = 1.0;
        ej[j] = 1.0;
        // Integrate v * phi_i * phi_j with phi_j folded into the integrand.
        const double ref = oracle::integrate_p1(
            g.a(), g.fine_h(), g.fine_elements(), ei,
            [&](double x, Complex ui, Complex) {
              const double hx = 1.0 - std::abs(x - g.dof_x(Level::fine, j)) / g.fine_h();
              return (1.0 + x * x * x * x) * ui.real() * std::max(0.0, hx);
            },
            64);
        CHECK(mv.entry(i, j).real() == doctest::Approx(ref).epsilon(1e-9));
      }
    }
    CHECK_THROWS_AS(fem::assemble_p1_matrix(g, Level::fine, fem::MatrixKind::weighted_mass),
                    InvalidArgument);
  }

  TEST_CASE("interpolation and prolongation are exact for linear functions") {
    const GridHierarchy g(0.0, 4.0, 4, 3);
    auto f = [](double x) { return Complex(x * (4.0 - x) > 0 ? 2.0 * x : 0.0, -x); };
    const auto coarse = fem::interpolate(g, Level::coarse, f);
    const auto fine = fem::prolong(g, coarse);
    for (int d = 0; d < g.dofs(Level::fine); ++d) {
      const double x = g.dof_x(Level::fine, d);
      // Piecewise linear between coarse nodes, zero at the boundary.
      const double xl = std::floor(x) , xr = xl + 1.0;
      const auto node = [&](double xn) { return (xn <= 0.0 || xn >= 4.0) ? Complex{} : f(xn); };
      const Complex expect = node(xl) * (xr - x) + node(xr) * (x - xl);
      CHECK(std::abs(fine[d] - expect) < 1e-14);
    }
  }

  TEST_CASE("prolong_transpose is the adjoint of prolong") {
    oracle::Rng rng(4);
    const GridHierarchy g(-3.0, 5.0, 6, 3);
    const CVector c = rng.cvector(g.dofs(Level::coarse));
    const CVector f = rng.cvector(g.dofs(Level::fine));
    const CVector pc = fem::prolong(g, c);
    const CVector ptf = fem::prolong_transpose(g, f);
    Complex lhs{}, rhs{};
    for (std::size_t i = 0; i < f.size(); ++i) lhs += std::conj(f[i]) * pc[i];
    for (std::size_t i = 0; i < c.size(); ++i) rhs += std::conj(ptf[i]) * c[i];
    CHECK(std::abs(lhs - rhs) < 1e-12);
  }

  TEST_CASE("coarse L2 projection is idempotent and orthogonal") {
    oracle::Rng rng(8);
    const GridHierarchy g(0.0, 1.0, 8, 3);
    const fem::FeFunction f{Level::fine, rng.cvector(g.dofs(Level::fine))};
    const auto p = fem::l2_project_coarse(g, f);
    REQUIRE(p.level == Level::coarse);
    const auto pp = fem::l2_project_coarse(g, {Level::fine, fem::prolong(g, p.values)});
    CHECK(oracle::max_diff(p.values, pp.values) < 1e-12);
    // <f - P f, phi_H> = 0 for every coarse hat.
    const auto m = fem::assemble_p1_matrix(g, Level::fine, fem::MatrixKind::mass);
    CVector r = fem::prolong(g, p.values);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = f.values[i] - r[i];
    const CVector defect = fem::prolong_transpose(g, m * r);
    CHECK(oracle::max_abs(defect) < 1e-13);
  }

  TEST_CASE("quadrature integrates polynomials of degree seven exactly") {
    const GridHierarchy g(-2.0, 3.0, 5, 1);
    const double v = fem::integrate(g, Level::coarse, [](double x) { return x * x * x * x * x * x * x + x * x; });
    const double exact = (std::pow(3.0, 8) - std::pow(-2.0, 8)) / 8.0 + (27.0 + 8.0) / 3.0;
    CHECK(v == doctest::Approx(exact).epsilon(1e-13));
  }

  TEST_CASE("cubic load matches refined quadrature") {
    oracle::Rng rng(12);
    const GridHierarchy g(-1.0, 1.0, 4, 2);
    const int n = g.dofs(Level::fine);
    const std::vector<Complex> a = rng.cvector(n), b = rng.cvector(n);
    const double beta = -1.5;
    const CVector load = fem::assemble_cubic_load(g, a, b, beta);
    for (int p = 0; p < n; ++p) {
      const double xp = g.dof_x(Level::fine, p);
      auto hat = [&](double x) { return std::max(0.0, 1.0 - std::abs(x - xp) / g.fine_h()); };
      auto integrand = [&](int e, double s) {
        const double x = g.a() + (e + s) * g.fine_h();
        const Complex av = oracle::p1_value(a, e, s), bv = oracle::p1_value(b, e, s);
        return beta * (std::norm(av) + std::norm(bv)) * (av + bv) * hat(x);
      };
      const double re = oracle::integrate_elements(g.fine_h(), g.fine_elements(),
                                                   [&](int e, double s) { return integrand(e, s).real(); });
      const double im = oracle::integrate_elements(g.fine_h(), g.fine_elements(),
                                                   [&](int e, double s) { return integrand(e, s).imag(); });
      CHECK(load[p].real() == doctest::Approx(re).epsilon(1e-9));
      CHECK(load[p].imag() == doctest::Approx(im).epsilon(1e-9));
    }
  }

  TEST_CASE("potentials") {
    const auto z = fem::Potential::zero();
    CHECK(z.is_zero());
    CHECK(z(3.0) == 0.0);
    const auto c = fem::Potential::constant(2.5);
    CHECK(!c.is_zero());
    CHECK(c.translation_invariant());
    const auto s = fem::Potential::from_nodal_samples(0.0, 2.0, {0.0, 2.0, 0.0});
    CHECK(s(0.5) == doctest::Approx(1.0));
    CHECK(s(1.5) == doctest::Approx(1.0));
    const auto sum = c + s;
    CHECK(sum(1.0) == doctest::Approx(4.5));
  }
}
