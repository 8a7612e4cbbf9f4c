#include "natsim/scenario.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace natsim;
namespace fs = std::filesystem;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    const auto path = fs::temp_directory_path() / name;
    std::ofstream f(path);
    f << content;
    return path.string();
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

const char* tiny_lindblad = R"({
  "name": "tiny",
  "engine": "lindblad",
  "seed": 3,
  "excitation": {"kind": "coherent", "omega_rabi_MHz": 14.0},
  "noise": {"kind": "white"},
  "sweep": {"variable": "gamma_phi_b_MHz", "grid": [0.0, 10.0, 25.0]},
  "outputs": ["powers", "efficiency"]
})";

}  // namespace

TEST_SUITE("scenario") {

TEST_CASE("validation rejects an empty sweep grid with the field path") {
    const auto path = write_temp("bad_grid.json", R"({
      "name": "x", "engine": "lindblad",
      "sweep": {"variable": "gamma_phi_b_MHz", "grid": []}
    })");
    try {
        load_scenario(path);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("$.sweep.grid") != std::string::npos);
    }
}

TEST_CASE("validation rejects unknown keys") {
    const auto path = write_temp("bad_key.json", R"({
      "name": "x", "engine": "lindblad", "typo_key": 1,
      "sweep": {"variable": "gamma_phi_b_MHz", "grid": [1.0]}
    })");
    CHECK_THROWS_AS(load_scenario(path), ValidationError);
}

TEST_CASE("validation enforces engine/noise compatibility") {
    const auto p1 = write_temp("bad_engine1.json", R"({
      "name": "x", "engine": "lindblad",
      "noise": {"kind": "lorentzian", "xi0_MHz": 5.0, "nu_L_MHz": 190.0},
      "sweep": {"variable": "nu_L_MHz", "grid": [100.0, 200.0]}
    })");
    CHECK_THROWS_AS(load_scenario(p1), ValidationError);

    const auto p2 = write_temp("bad_engine2.json", R"({
      "name": "x", "engine": "stochastic",
      "noise": {"kind": "white"},
      "sweep": {"variable": "gamma_phi_b_MHz", "grid": [1.0]}
    })");
    CHECK_THROWS_AS(load_scenario(p2), ValidationError);

    const auto p3 = write_temp("bad_grid2.json", R"({
      "name": "x", "engine": "lindblad",
      "sweep": {"variable": "gamma_phi_b_MHz", "grid": [2.0, 1.0]}
    })");
    CHECK_THROWS_AS(load_scenario(p3), ValidationError);
}

TEST_CASE("reruns with the same config and seed are byte identical") {
    const auto cfg = write_temp("tiny.json", tiny_lindblad);
    const auto out1 = (fs::temp_directory_path() / "natsim_run1").string();
    const auto out2 = (fs::temp_directory_path() / "natsim_run2").string();
    const auto r1 = run_scenario_file(cfg, out1);
    const auto r2 = run_scenario_file(cfg, out2);
    CHECK(r1.rows.size() == 3);
    CHECK(slurp(fs::path(out1) / "summary.csv") == slurp(fs::path(out2) / "summary.csv"));

    // the manifest alone reproduces the run
    const auto out3 = (fs::temp_directory_path() / "natsim_run3").string();
    const auto r3 = run_scenario_file((fs::path(out1) / "manifest.json").string(), out3);
    CHECK(slurp(fs::path(out1) / "summary.csv") == slurp(fs::path(out3) / "summary.csv"));
    fs::remove_all(out1);
    fs::remove_all(out2);
    fs::remove_all(out3);
}

TEST_CASE("lindblad sweep reproduces noise-assisted transport") {
    const auto cfg = write_temp("tiny2.json", tiny_lindblad);
    const auto out = (fs::temp_directory_path() / "natsim_run_nat").string();
    const auto r = run_scenario_file(cfg, out);
    // eta rises from ~0 to a large interior value on this mini grid
    CHECK(r.rows[0].eta < 0.02);
    CHECK(r.rows[1].eta > 0.3);
    CHECK(r.rows[1].gamma_phi_b_mhz == 10.0);
    fs::remove_all(out);
}

TEST_CASE("undriven rate and lindblad engines both extract nothing") {
    Scenario sc;
    sc.name = "undriven";
    sc.engine = Engine::rate_eq;
    sc.params = SystemParams::table_s1();
    sc.params.omega_rabi_mhz = 0.0;
    sc.sweep_variable = SweepVariable::gamma_phi_b_mhz;
    sc.sweep_grid = {10.0};
    const auto out = (fs::temp_directory_path() / "natsim_run_undriven").string();
    const auto rate = run_scenario(sc, out);
    CHECK(rate.rows[0].p4 == doctest::Approx(0.0).epsilon(1e-12));

    sc.engine = Engine::lindblad;
    const auto lind = run_scenario(sc, out);
    CHECK(lind.rows[0].p4 < 1e-9);
    fs::remove_all(out);
}

TEST_CASE("engine comparison stays within the documented tolerances") {
    Scenario sc;
    sc.name = "cmp";
    sc.engine = Engine::lindblad;
    sc.params = SystemParams::table_s1();
    sc.sweep_variable = SweepVariable::gamma_phi_b_mhz;
    sc.sweep_grid = {2.0, 8.0, 16.0, 24.0, 32.0, 44.0, 60.0};
    sc.stochastic.relax_time_us = 2.0;
    sc.stochastic.avg_time_us = 2.0;
    const auto cmp = compare_engines(sc);
    CHECK(cmp.argmax_within_30pct);
    CHECK(cmp.eta_max_within_10pp);
    CHECK(cmp.reduction_within_5pct);

    const auto out = (fs::temp_directory_path() / "natsim_cmp").string();
    write_comparison(cmp, out);
    CHECK(fs::exists(fs::path(out) / "engine_comparison.json"));
    fs::remove_all(out);
}

TEST_CASE("fig s6 demo scenario writes decay curves") {
    const auto cfg = write_temp("demo.json", R"({
      "name": "s6_demo",
      "engine": "stochastic",
      "noise": {"kind": "lorentzian", "xi0_MHz": 1.0, "nu_L_MHz": 190.0},
      "sweep": {"variable": "fwhm_MHz", "grid": [10.0, 1000.0]},
      "single_qubit_demo": {"gamma_L_MHz": 1.6, "n_traj": 60}
    })");
    const auto out = (fs::temp_directory_path() / "natsim_demo").string();
    const auto r = run_scenario_file(cfg, out);
    CHECK(r.rows.size() == 2);
    CHECK(fs::exists(fs::path(out) / "point_000_sigma_x.csv"));
    CHECK(fs::exists(fs::path(out) / "point_001_sigma_x.csv"));
    fs::remove_all(out);
}

}  // TEST_SUITE
