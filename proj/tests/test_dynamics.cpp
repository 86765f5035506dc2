#include <doctest.h>

#include "core/benchmark.hpp"
#include "core/dynamics.hpp"
#include "core/invariants.hpp"
#include "lod_oracles.hpp"

using namespace gpelod;
using fem::GridHierarchy;
using fem::Level;

namespace {

std::shared_ptr<const lod::LodSpace> small_space(double beta, int layers = 3) {
  const GridHierarchy g(-4.0, 4.0, 8, 3);
  lod::LodOptions opt;
  opt.layers = layers;
  return std::make_shared<const lod::LodSpace>(
      g, fem::PotentialSplit{fem::Potential::zero(), fem::Potential::zero(), beta}, opt);
}

CVector smooth_state(const GridHierarchy& g, Level level) {
  return fem::interpolate(g, level, [](double x) {
    return Complex(std::exp(-x * x), 0.5 * x * std::exp(-x * x));
  });
}

}  // namespace

TEST_SUITE("dynamics") {
  TEST_CASE("one modified step agrees with a dense Newton reference") {
    const double beta = 1.0, tau = 0.05;
    const auto s = small_space(beta);
    const oracle::DenseModified ref(*s);
    oracle::Rng rng(41);
    const CVector u = rng.cvector(s->dim());
    dyn::SolverOptions opt;
    opt.tolerance = 1e-13;
    const auto stepper = dyn::Stepper::modified(s, beta, tau, opt);
    const CVector x = stepper.advance(u);
    const auto expect = ref.step(u, beta, tau);
    CHECK(oracle::max_diff(x, expect) < 1e-8);
    CHECK(oracle::max_abs(ref.residual(u, x, beta, tau)) < 1e-10);
    // The library's nonlinear vector matches the dense one.
    CHECK(oracle::max_diff(stepper.nonlinear_term(u, x), ref.nonlinear(u, x, beta)) < 1e-10);
  }

  TEST_CASE("modified scheme conserves mass and the LOD energy") {
    const double beta = -2.0;
    const auto s = small_space(beta);
    auto st = dyn::Stepper::modified(s, beta, 0.02, {1e-13, 200, false});
    const CVector u0 = ritz_project(*s, {Level::fine, smooth_state(s->grid(), Level::fine)});
    st.set_state(u0);
    const double m0 = inv::mass(*s, u0);
    const double e0 = inv::modified_energy(*s, u0, beta);
    for (int n = 0; n < 25; ++n) st.step();
    CHECK(inv::mass(*s, st.state()) == doctest::Approx(m0).epsilon(1e-11));
    CHECK(inv::modified_energy(*s, st.state(), beta) == doctest::Approx(e0).epsilon(1e-10));
    CHECK(st.step_index() == 25);
    CHECK(st.time() == doctest::Approx(0.5));
  }

  TEST_CASE("a step followed by a negative step returns to the start") {
    const double beta = -1.0, tau = 0.03;
    const dyn::SolverOptions opt{1e-14, 200, false};
    const auto s = small_space(beta);
    const CVector u0 = ritz_project(*s, {Level::fine, smooth_state(s->grid(), Level::fine)});
    for (auto make : {dyn::Stepper::modified, dyn::Stepper::classical_lod}) {
      auto st = make(s, beta, tau, opt);
      st.set_state(u0);
      st.step();
      st.set_tau(-tau);
      st.step();
      CHECK(oracle::max_diff(st.state(), u0) < 1e-11);
      CHECK(std::abs(st.time()) < 1e-15);
    }
    const GridHierarchy g(-4.0, 4.0, 2, 6);
    auto fem = dyn::Stepper::classical_fem(g, fem::Potential::zero(), beta, tau, opt);
    const CVector f0 = smooth_state(g, Level::fine);
    fem.set_state(f0);
    fem.step();
    fem.set_tau(-tau);
    fem.step();
    CHECK(oracle::max_diff(fem.state(), f0) < 1e-11);
  }

  TEST_CASE("steps commute with a global phase") {
    const double beta = -2.0;
    const auto s = small_space(beta);
    oracle::Rng rng(43);
    const CVector u = rng.cvector(s->dim());
    const Complex rot = std::polar(1.0, 0.9);
    CVector ur(u);
    for (auto& v : ur) v *= rot;
    for (auto make : {dyn::Stepper::modified, dyn::Stepper::classical_lod}) {
      const auto st = make(s, beta, 0.01, {1e-14, 200, false});
      CVector a = st.advance(u);
      for (auto& v : a) v *= rot;
      CHECK(oracle::max_diff(a, st.advance(ur)) < 1e-12);
    }
  }

  TEST_CASE("linear problems take a single solve") {
    const auto s = small_space(0.0);
    auto st = dyn::Stepper::modified(s, 0.0, 0.1);
    oracle::Rng rng(47);
    st.set_state(rng.cvector(s->dim()));
    CHECK(st.step().iterations == 1);
  }

  TEST_CASE("evolve records the start, every stride and the end") {
    const auto s = small_space(-1.0);
    auto st = dyn::Stepper::modified(s, -1.0, 0.01);
    const CVector u0 = ritz_project(*s, {Level::fine, smooth_state(s->grid(), Level::fine)});
    std::vector<long long> seen;
    auto record = [&](long long n, double, std::span<const Complex>) { seen.push_back(n); };
    st.set_state(u0);
    auto tr = dyn::evolve(st, 10, 3, record);
    CHECK(seen == std::vector<long long>{0, 3, 6, 9, 10});
    CHECK(tr.steps_done == 10);
    CHECK(tr.iterations.size() == 10);
    CHECK(!tr.failure);
    seen.clear();
    st.set_state(u0);
    dyn::evolve(st, 10, 0, record);
    CHECK(seen == std::vector<long long>{0, 10});
  }

  TEST_CASE("a non-converging step throws and keeps the state") {
    const auto s = small_space(-2.0);
    auto st = dyn::Stepper::modified(s, -2.0, 0.5, {1e-15, 2, false});
    const CVector u0 = ritz_project(*s, {Level::fine, smooth_state(s->grid(), Level::fine)});
    st.set_state(u0, 1.0);
    CHECK_THROWS_AS(st.step(), NotConverged);
    CHECK(oracle::max_diff(st.state(), u0) == 0.0);
    CHECK(st.time() == 1.0);
    CHECK(st.step_index() == 0);
    auto tr = dyn::evolve(st, 3, 1);
    CHECK(tr.failure);
    CHECK(tr.steps_done == 0);
  }

  TEST_CASE("Newton and fixed-point FEM steps agree") {
    const GridHierarchy g(-5.0, 5.0, 2, 7);
    const CVector u0 = smooth_state(g, Level::fine);
    const auto picard = dyn::Stepper::classical_fem(g, fem::Potential::zero(), -2.0, 0.02, {1e-13, 200, false});
    const auto newton = dyn::Stepper::classical_fem(g, fem::Potential::zero(), -2.0, 0.02, {1e-13, 50, true});
    dyn::StepStats sn;
    const CVector a = picard.advance(u0);
    const CVector b = newton.advance(u0, &sn);
    CHECK(oracle::max_diff(a, b) < 1e-11);
    CHECK(sn.iterations <= 6);
  }

  TEST_CASE("invalid inputs") {
    const auto s = small_space(1.0);
    auto st = dyn::Stepper::modified(s, 1.0, 0.1);
    CHECK_THROWS_AS(st.set_state(CVector(3)), DimensionMismatch);
    CHECK_THROWS_AS(st.advance(CVector(3)), DimensionMismatch);
    CHECK_THROWS_AS(dyn::Stepper::modified(nullptr, 1.0, 0.1), InvalidArgument);
  }
}
