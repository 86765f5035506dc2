#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "core/lod.hpp"
#include "lod_oracles.hpp"

using namespace gpelod;
using fem::GridHierarchy;
using fem::Level;

namespace {

fem::PotentialSplit split_with(double v1) {
  return {v1 == 0.0 ? fem::Potential::zero() : fem::Potential::constant(v1),
          fem::Potential::zero(), 1.0};
}

CVector unit(int n, int i) {
  CVector e(n);
  e[i] = 1.0;
  return e;
}

}  // namespace

TEST_SUITE("lod") {
  TEST_CASE("patches are clipped at the domain ends") {
    const GridHierarchy g(0.0, 8.0, 8, 2);
    const auto p = lod::build_patch(g, 0, 2);
    CHECK(p.first_element == 0);
    CHECK(p.last_element == 2);
    CHECK(p.fine_dof_begin == 0);
    CHECK(p.fine_dof_end == 11);
    CHECK(p.coarse_dof_begin == 0);
    CHECK(p.coarse_dof_end == 3);
    const auto q = lod::build_patch(g, 4, 1);
    CHECK(q.first_element == 3);
    CHECK(q.last_element == 5);
    CHECK(q.fine_dof_count() == 11);
    CHECK(q.coarse_dof_begin == 2);
    CHECK(q.coarse_dof_end == 6);
    const auto full = lod::build_patch(g, 7, 20);
    CHECK(full.element_count() == 8);
    CHECK(full.fine_dof_count() == g.dofs(Level::fine));
    CHECK_THROWS_AS(lod::build_patch(g, 8, 1), InvalidArgument);
  }

  TEST_CASE("default layers") {
    CHECK(lod::default_layers(40.0 / 128.0) == 4);
    CHECK(lod::default_layers(40.0 / 256.0) == 6);
    CHECK(lod::default_layers(40.0 / 1024.0) == 10);
    CHECK(lod::default_layers(1.0) == 1);
  }

  TEST_CASE("full-domain patches reproduce the ideal saddle-point basis") {
    for (double v1 : {0.0, 3.0}) {
      const GridHierarchy g(-20.0, 20.0, 8, 3);
      lod::LodOptions opt;
      opt.layers = 8;
      const lod::LodSpace s(g, split_with(v1), opt);
      const auto ideal = oracle::ideal_basis(g, v1);
      for (int c = 0; c < s.dim(); ++c) {
        const CVector phi = s.expand(unit(s.dim(), c));
        CHECK(oracle::max_diff(phi, ideal[c]) <= 1e-10);
      }
    }
  }

  TEST_CASE("correctors lie in the kernel of the coarse projection") {
    const GridHierarchy g(0.0, 10.0, 10, 3);
    const auto v1 = fem::Potential::from_function([](double x) { return 1.0 + std::sin(x) * std::sin(x); });
    for (int layers : {1, 2, 3}) {
      const auto q = lod::solve_corrector(g, v1, 4, 5, layers);
      CVector full(g.dofs(Level::fine));
      for (std::size_t i = 0; i < q.values.size(); ++i) full[q.offset + i] = q.values[i];
      const auto pq = fem::l2_project_coarse(g, {Level::fine, full});
      CHECK(oracle::max_abs(pq.values) < 1e-12);
    }
  }

  TEST_CASE("omega at tolerance zero equals direct triple-product quadrature") {
    const GridHierarchy g(-20.0, 20.0, 8, 3);
    lod::LodOptions opt;
    opt.layers = 2;
    opt.omega_tolerance = 0.0;
    const lod::LodSpace s(g, split_with(0.0), opt);
    const int n = s.dim();
    std::vector<CVector> phi(n);
    for (int c = 0; c < n; ++c) phi[c] = s.expand(unit(n, c));
    double worst = 0.0;
    for (int k = 0; k < n; ++k) {
      for (int j = k; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
          // Cubic on each fine element: two Simpson panels are exact.
          double ref = 0.0;
          const double h = g.fine_h();
          for (int e = 0; e < g.fine_elements(); ++e) {
            for (int q = 0; q <= 2; ++q) {
              const double s_ = 0.5 * q;
              const double w = q == 1 ? 4.0 : 1.0;
              ref += w * h / 6.0 *
                     (oracle::p1_value(phi[k], e, s_) * oracle::p1_value(phi[j], e, s_) *
                      oracle::p1_value(phi[i], e, s_))
                         .real();
            }
          }
          worst = std::max(worst, std::abs(s.omega().value(k, j, i) - ref));
        }
      }
    }
    CHECK(worst <= 1e-12);
  }

  TEST_CASE("LOD matrices are Galerkin products of the fine matrices") {
    const GridHierarchy g(0.0, 6.0, 6, 3);
    const fem::PotentialSplit split{
        fem::Potential::constant(0.5),
        fem::Potential::from_function([](double x) { return std::cos(x); }), -1.0};
    lod::LodOptions opt;
    opt.layers = 2;
    const lod::LodSpace s(g, split, opt);
    const auto mf = fem::assemble_p1_matrix(g, Level::fine, fem::MatrixKind::mass);
    const auto kf = fem::assemble_p1_matrix(g, Level::fine, fem::MatrixKind::stiffness);
    const auto vt = split.total();
    const auto vf = fem::assemble_p1_matrix(g, Level::fine, fem::MatrixKind::weighted_mass, &vt);
    const int n = s.dim();
    std::vector<CVector> phi(n);
    for (int c = 0; c < n; ++c) phi[c] = s.expand(unit(n, c));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const CVector mj = mf * phi[j], kj = kf * phi[j], vj = vf * phi[j];
        Complex m{}, k{}, v{};
        for (std::size_t d = 0; d < phi[i].size(); ++d) {
          m += phi[i][d] * mj[d];
          k += phi[i][d] * kj[d];
          v += phi[i][d] * vj[d];
        }
        CHECK(std::abs(s.mass().entry(i, j) - m) < 1e-12);
        CHECK(std::abs(s.stiffness().entry(i, j) - k) < 1e-11);
        CHECK(std::abs(s.potential_mass().entry(i, j) - v) < 1e-12);
      }
    }
  }

  TEST_CASE("Ritz projection is a-orthogonal and idempotent") {
    const GridHierarchy g(-5.0, 5.0, 10, 4);
    lod::LodOptions opt;
    opt.layers = 3;
    const lod::LodSpace s(g, split_with(1.0), opt);
    const auto u0 = fem::interpolate(g, Level::fine, [](double x) {
      return Complex(std::exp(-x * x), 0.3 * x * std::exp(-x * x));
    });
    const CVector U = lod::ritz_project(s, {Level::fine, u0});
    const CVector fine = s.expand(U);
    CVector diff(fine.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = fine[i] - u0[i];
    const CVector r = s.restrict_load(s.fine_a_matrix() * diff);
    CHECK(oracle::max_abs(r) < 1e-12);
    const CVector again = lod::ritz_project(s, {Level::fine, fine});
    CHECK(oracle::max_diff(again, U) < 1e-12);
  }

  TEST_CASE("translation reuse gives the same space as solving every corrector") {
    const GridHierarchy g(-8.0, 8.0, 16, 3);
    lod::LodOptions with, without;
    with.layers = without.layers = 2;
    without.allow_translation_reuse = false;
    const lod::LodSpace a(g, split_with(0.0), with);
    const lod::LodSpace b(g, split_with(0.0), without);
    CHECK(a.used_translation_reuse());
    CHECK(!b.used_translation_reuse());
    CHECK(a.corrector_solves() < b.corrector_solves());
    for (int c = 0; c < a.dim(); ++c) {
      CHECK(oracle::max_diff(a.expand(unit(a.dim(), c)), b.expand(unit(b.dim(), c))) < 1e-14);
    }
  }

  TEST_CASE("cache round trip and key mismatch") {
    const GridHierarchy g(-4.0, 4.0, 8, 2);
    lod::LodOptions opt;
    opt.layers = 2;
    const lod::LodSpace s(g, split_with(0.0), opt);
    const auto dir = std::filesystem::temp_directory_path() / "gpelod_cache_test";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "space.bin").string();
    lod::save_lod_cache(s, path);
    const auto loaded = lod::load_lod_cache(path, g, split_with(0.0), opt);
    REQUIRE(loaded.has_value());
    CHECK(loaded->omega().size() == s.omega().size());
    for (int c = 0; c < s.dim(); ++c) {
      CHECK(oracle::max_diff(loaded->expand(unit(s.dim(), c)), s.expand(unit(s.dim(), c))) == 0.0);
    }
    lod::LodOptions other = opt;
    other.layers = 3;
    CHECK(!lod::load_lod_cache(path, g, split_with(0.0), other).has_value());
    CHECK(!lod::load_lod_cache(path, g, split_with(2.0), opt).has_value());
    CHECK(!lod::load_lod_cache((dir / "missing.bin").string(), g, split_with(0.0), opt));
    {
      std::ofstream bad((dir / "bad.bin").string(), std::ios::binary);
      bad << "NOTACACHEFILE";
    }
    CHECK_THROWS_AS(lod::load_lod_cache((dir / "bad.bin").string(), g, split_with(0.0), opt),
                    IoError);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("invalid configurations are rejected") {
    const GridHierarchy g0(0.0, 1.0, 4, 0);
    CHECK_THROWS_AS(lod::LodSpace(g0, split_with(0.0), {}), InvalidArgument);
    const GridHierarchy g(0.0, 1.0, 4, 2);
    const fem::PotentialSplit negative{fem::Potential::constant(-1.0), fem::Potential::zero(), 1.0};
    CHECK_THROWS_AS(lod::LodSpace(g, negative, {}), InvalidArgument);
  }
}
