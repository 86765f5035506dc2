#include <doctest.h>

#include <numbers>

#include "core/benchmark.hpp"
#include "core/invariants.hpp"
#include "oracles.hpp"

using namespace gpelod;
using fem::GridHierarchy;
using fem::Level;

TEST_SUITE("benchmark") {
  TEST_CASE("closed-form value at the origin") {
    const Complex u = bench::exact_solution(0.0, 0.0);
    CHECK(u.real() == doctest::Approx(-216.0 / 37.0).epsilon(1e-15));
    CHECK(std::abs(u.imag()) < 1e-15);
    // Far field decays like the heavier soliton's tail and never overflows.
    CHECK(std::abs(bench::exact_solution(400.0, 0.3)) < 1e-300);
    CHECK(std::isfinite(std::abs(bench::exact_solution(-1e4, 0.0))));
  }

  TEST_CASE("analytic derivative matches central differences") {
    const double d = 1e-6;
    for (double t : {0.0, 0.3, 1.1}) {
      for (double x : {-3.2, -0.7, -1e-3, 0.4, 2.5}) {
        const Complex fd =
            (bench::exact_solution(x + d, t) - bench::exact_solution(x - d, t)) / (2.0 * d);
        CHECK(std::abs(bench::exact_solution_dx(x, t) - fd) < 1e-6 * (1.0 + std::abs(fd)));
      }
    }
  }

  TEST_CASE("exact solution satisfies i u_t = -u_xx - 2|u|^2 u") {
    const double d = 1e-4;
    for (double t : {0.1, 0.45}) {
      for (double x : {-2.0, -0.6, 0.3, 1.7}) {
        const Complex u = bench::exact_solution(x, t);
        const Complex ut =
            (bench::exact_solution(x, t + d) - bench::exact_solution(x, t - d)) / (2.0 * d);
        const Complex uxx = (bench::exact_solution_dx(x + d, t) - bench::exact_solution_dx(x - d, t)) /
                            (2.0 * d);
        const Complex residual = kI * ut + uxx + 2.0 * std::norm(u) * u;
        CHECK(std::abs(residual) < 1e-5 * (1.0 + std::abs(uxx)));
      }
    }
  }

  TEST_CASE("time periodicity of the solution and its density") {
    const double pi = std::numbers::pi;
    for (double x : {-1.3, 0.0, 0.8}) {
      for (double t : {0.0, 0.2}) {
        CHECK(std::abs(bench::exact_solution(x, t + pi / 2) - bench::exact_solution(x, t)) < 1e-12);
        CHECK(std::norm(bench::exact_solution(x, t + pi / 6)) ==
              doctest::Approx(std::norm(bench::exact_solution(x, t))).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("quadrature of the exact solution gives M = 12, E = -48, P = 0") {
    const GridHierarchy g(-20.0, 20.0, 2, 11);
    for (double t : {0.0, 0.3}) {
      const auto r = bench::exact_invariants(g, t);
      CHECK(r.mass == doctest::Approx(12.0).epsilon(1e-9));
      CHECK(r.energy == doctest::Approx(-48.0).epsilon(1e-8));
      CHECK(std::abs(r.momentum) < 1e-10);
      CHECK(r.xc == doctest::Approx(bench::BenchmarkProblem{}.center_of_mass).epsilon(1e-8));
    }
  }

  TEST_CASE("interpolant energy offset on h = 40/2^14") {
    const GridHierarchy g(-20.0, 20.0, 2, 13);
    const CVector u = bench::exact_interpolant(g, 0.0);
    const double e = inv::energy(g, Level::fine, u, fem::Potential::zero(), -2.0);
    CHECK(e == doctest::Approx(-47.9914743).epsilon(1e-9));
  }

  TEST_CASE("drift velocity model") {
    const auto zero = bench::drift_velocities(0.0);
    CHECK(zero.c1 == 0.0);
    CHECK(zero.c2 == 0.0);
    const auto v = bench::drift_velocities(0.0085257);
    CHECK(v.c1 == doctest::Approx(0.0754).epsilon(0.0005 / 0.0754));
    CHECK(v.c1 == doctest::Approx(std::sqrt(2.0 * 0.0085257 / 3.0)));
    CHECK(v.c1 == doctest::Approx(2.0 * v.c2));
    CHECK_THROWS_AS(bench::drift_velocities(-1.0), InvalidArgument);
  }

  TEST_CASE("error norms vanish for the interpolant and scale with perturbations") {
    const GridHierarchy g(-20.0, 20.0, 2, 10);
    CVector u = bench::exact_interpolant(g, 0.4);
    const auto e0 = bench::error_norms(g, u, 0.4);
    CHECK(e0.l2 == 0.0);
    CHECK(e0.h1 == 0.0);
    for (auto& x : u) x *= 1.01;
    const auto e1 = bench::error_norms(g, u, 0.4);
    CHECK(e1.l2 == doctest::Approx(0.01).epsilon(1e-9));
    CHECK(e1.h1 == doctest::Approx(0.01).epsilon(1e-9));
    CHECK_THROWS_AS(bench::error_norms(g, CVector(3), 0.0), DimensionMismatch);
  }
}
