#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "core/benchmark.hpp"
#include "harness/config.hpp"
#include "harness/experiments.hpp"
#include "harness/potentials.hpp"
#include "harness/report.hpp"

using namespace gpelod;
using namespace gpelod::harness;

namespace {

ExperimentConfig small_invariants() {
  ExperimentConfig cfg;
  cfg.coarse_exponents = {4, 5};
  cfg.fine_exponent = 9;
  cfg.threads = 1;
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("config defaults and parsing") {
    const auto cfg = parse_config(
        "[grid]\ncoarse_exponents = 6, 7\nfine_exponent = 12\n"
        "[lod]\nlayers = 3\n"
        "[time]\ntau = 0.01\nfinal_time = 0.5\n"
        "[solver]\ntolerance = 1e-9\nnewton = true\n");
    CHECK(cfg.coarse_exponents == std::vector<int>{6, 7});
    CHECK(cfg.fine_exponent == 12);
    CHECK(cfg.layers == std::vector<int>{3});
    CHECK(cfg.solver.tolerance == 1e-9);
    CHECK(cfg.solver.newton);
    const auto tg = cfg.time_grid();
    CHECK(tg.steps == 50);
    CHECK(tg.tau == doctest::Approx(0.01));
    CHECK(cfg.is_benchmark());
    CHECK(parse_config("[lod]\nlayers = auto\n").layers.empty());
    const auto d = cfg.describe();
    CHECK(std::find(d.begin(), d.end(), "grid.fine_exponent = 12") != d.end());
  }

  TEST_CASE("config errors") {
    CHECK_THROWS_AS(parse_config("[grid]\nnot_a_key = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[grid]\nfine_exponent = x\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[time]\ntau = 0.1\n").time_grid(), ConfigError);
    CHECK_THROWS_AS(parse_config("[time]\ntau = 0.1\nsteps = 3\nfinal_time = 1\n").time_grid(),
                    ConfigError);
    CHECK_THROWS_AS(parse_config("[grid]\ncoarse_exponents = 9\nfine_exponent = 8\n").validate(),
                    ConfigError);
    CHECK_THROWS_AS(parse_config("[problem]\nbeta = 1\n").validate(), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.ini"), Error);
  }

  TEST_CASE("overrides") {
    auto cfg = parse_config("[time]\ntau = 0.01\nfinal_time = 1\n");
    Overrides o;
    o.tau = 0.02;
    o.coarse_exponent = 6;
    o.layers = 2;
    apply_overrides(cfg, o);
    CHECK(cfg.time_grid().steps == 50);
    CHECK(cfg.coarse_exponents == std::vector<int>{6});
    CHECK(cfg.layers == std::vector<int>{2});
    Overrides s;
    s.steps = 7;
    apply_overrides(cfg, s);
    CHECK(!cfg.final_time);
    CHECK(cfg.time_grid().steps == 7);
    CHECK(cfg.time_grid().tau == 0.02);
  }

  TEST_CASE("CSV rows round-trip with full precision") {
    ReportRow r;
    r.experiment = "x";
    r.H = 0.1;
    r.energy = -48.000000000000014;
    const auto f = split_csv_line(csv_line(r));
    REQUIRE(f.size() == kReportColumns.size());
    CHECK(f[0] == "x");
    CHECK(std::stod(f[1]) == 0.1);
    CHECK(f[2].empty());
    CHECK(format_number(1.0 / 3.0) == "0.33333333333333331");
    CHECK(format_optional(std::nullopt).empty());
  }

  TEST_CASE("analysis helpers") {
    CHECK(observed_order(8.0, 1.0) == doctest::Approx(3.0));
    CHECK(observed_order(9.0, 1.0, 3.0) == doctest::Approx(2.0));
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
    CHECK(median({NAN, 1.0, 5.0}) == 3.0);
    CHECK(std::isnan(median({})));
    CHECK(saturation_index({8.0, 4.0, 2.0, 1.05, 1.0, 1.02}) == 3);
    CHECK(saturation_index({1.0}) == 0);
    CHECK(fit_slope({0.0, 1.0, 2.0, 3.0}, {1.0, 3.0, 5.0, 7.0}) == doctest::Approx(2.0));
    // Two Gaussians sampled on a grid: peaks refined off-grid.
    std::vector<double> x, d;
    for (int i = 0; i <= 400; ++i) {
      x.push_back(-10.0 + 0.05 * i);
      const double a = x.back() + 2.013, b = x.back() - 3.021;
      d.push_back(16.0 * std::exp(-a * a) + 4.0 * std::exp(-b * b));
    }
    const auto p = density_peaks(x, d, 1.0);
    REQUIRE(p.size() == 2);
    CHECK(p[0].first == doctest::Approx(-2.013).epsilon(2e-3));
    CHECK(p[1].first == doctest::Approx(3.021).epsilon(2e-3));
    CHECK(p[0].second > p[1].second);
  }

  TEST_CASE("named potentials") {
    CHECK(parse_potential("zero", 1.0).is_zero());
    CHECK(parse_potential("constant:2", 1.0)(5.0) == 2.0);
    CHECK(parse_potential("harmonic:2", 1.0)(3.0) == doctest::Approx(18.0));
    const auto lat = parse_potential("lattice:3,2", 1.0);
    CHECK(lat(0.5) == doctest::Approx(3.0));
    CHECK(lat.translation_invariant());
    CHECK(!parse_potential("lattice:3,2", 0.5).translation_invariant());
    CHECK_THROWS_AS(parse_potential("bogus", 1.0), ConfigError);
    CHECK_THROWS_AS(parse_potential("harmonic:", 1.0), ConfigError);
  }

  TEST_CASE("invariant sweep rows match direct evaluation") {
    const auto cfg = small_invariants();
    const auto r = run_invariant_convergence(cfg);
    REQUIRE(r.rows.size() == 2);
    CHECK(r.failures.empty());
    const auto setup = make_setup(cfg, 5, 9);
    const auto b = build_space(cfg, setup, 0);
    const auto u0 = fem::interpolate(setup.grid, fem::Level::fine, setup.initial);
    const CVector U0 = lod::ritz_project(*b.space, {fem::Level::fine, u0});
    CHECK(*r.rows[1].mass == doctest::Approx(inv::mass(*b.space, U0)).epsilon(1e-14));
    CHECK(*r.rows[1].ell == b.space->layers());
    // Two levels give exactly one order per quantity.
    const double ee = std::abs(*r.rows[0].energy + 48.0), ef = std::abs(*r.rows[1].energy + 48.0);
    CHECK(std::stod(*r.get("median_order_energy")) == doctest::Approx(observed_order(ee, ef)));
  }

  TEST_CASE("runs are deterministic and independent of the worker count") {
    auto cfg = small_invariants();
    const auto a = run_invariant_convergence(cfg);
    cfg.threads = 2;
    const auto b = run_invariant_convergence(cfg);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
      auto ra = a.rows[i], rb = b.rows[i];
      ra.wall_ms.reset();
      rb.wall_ms.reset();
      CHECK(csv_line(ra) == csv_line(rb));
    }
  }

  TEST_CASE("single-layer decay sweep and report files") {
    ExperimentConfig cfg;
    cfg.coarse_exponents = {4};
    cfg.fine_exponent = 8;
    cfg.layers = {1};
    cfg.threads = 1;
    const auto r = run_locality_decay(cfg);
    CHECK(r.rows.size() == 1);
    const auto dir = std::filesystem::temp_directory_path() / "gpelod_harness_test";
    std::filesystem::remove_all(dir);
    const auto files = write_report(r, dir.string());
    CHECK(!files.empty());
    const std::string csv = slurp(dir / "decay.csv");
    CHECK(csv.find("# ") == 0);
    CHECK(csv.find("experiment,H,ell") != std::string::npos);
    CHECK(std::filesystem::exists(dir / "decay_summary.txt"));
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("unknown experiments are rejected") {
    CHECK(experiment_names().size() == 5);
    CHECK_THROWS_AS(run_experiment("nope", ExperimentConfig{}), InvalidArgument);
  }
}
