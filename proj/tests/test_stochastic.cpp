#include "natsim/stochastic.hpp"
#include "oracle_helpers.hpp"

#include <doctest.h>

#include <filesystem>

using namespace natsim;

namespace {

StochasticConfig fast_config() {
    StochasticConfig cfg;
    cfg.n_traj = 4;
    cfg.base_seed = 7;
    cfg.relax_time_us = 1.0;
    cfg.avg_time_us = 1.0;
    cfg.tau_max_us = 0.3;
    cfg.tau_stride = 5;
    return cfg;
}

}  // namespace

TEST_SUITE("stochastic") {

TEST_CASE("white noise is rejected by the stochastic engine") {
    StochasticConfig cfg = fast_config();
    CHECK_THROWS_AS(
        run_stochastic_powers(SystemParams::table_s1(), NoiseSpec::white(1.0), cfg),
        std::invalid_argument);
}

TEST_CASE("zero-amplitude noise reduces to the lindblad steady state") {
    SystemParams p = SystemParams::table_s1();
    StochasticConfig cfg = fast_config();
    cfg.n_traj = 1;
    cfg.relax_time_us = 2.0;
    cfg.avg_time_us = 2.0;
    const auto st =
        run_stochastic_powers(p, NoiseSpec::lorentzian_from_xi0(0.0, 190.0, 10.0), cfg);
    CHECK(st.meta.n_failed == 0);

    HilbertSpace space(3, 3);
    SystemParams p0 = p;
    p0.gamma_phi_mhz = 0.0;
    const Superoperator L = build_liouvillian(p0, build_hamiltonian(p0, space), space);
    const auto mom = port_moments(steady_state(L), space);
    const double p4_lind =
        two_pi * p.kappa_mhz * (mom.photon_number - std::norm(mom.field_amplitude));
    const double p2_lind =
        two_pi * (p.gamma_b_mhz / 2.0) *
        (mom.bright_population - std::norm(mom.bright_amplitude));
    CHECK(st.summary.p4_photons_per_us == doctest::Approx(p4_lind).epsilon(0.05));
    CHECK(st.summary.p2_photons_per_us == doctest::Approx(p2_lind).epsilon(0.05));
}

TEST_CASE("ensemble average is linear over contiguous halves") {
    const SystemParams p = SystemParams::table_s1();
    const auto spec = NoiseSpec::lorentzian_from_xi0(8.0, 190.0, 10.0);
    StochasticConfig cfg = fast_config();
    cfg.n_traj = 8;
    cfg.relax_time_us = 0.4;
    cfg.tau_max_us = 0.1;

    const auto full = ensemble_correlations(p, spec, cfg, 0, 8);
    const auto left = ensemble_correlations(p, spec, cfg, 0, 4);
    const auto right = ensemble_correlations(p, spec, cfg, 4, 8);
    const auto merged = TrajectoryEnsemble::merge(left, right);

    REQUIRE(merged.sum_c4.size() == full.sum_c4.size());
    for (std::size_t i = 0; i < full.sum_c4.size(); ++i) {
        CHECK(merged.sum_c4[i] == full.sum_c4[i]);  // bit identical
        CHECK(merged.sum_c2[i] == full.sum_c2[i]);
    }
    CHECK(merged.sum_p4 == full.sum_p4);
    CHECK_THROWS_AS(TrajectoryEnsemble::merge(left, left), std::invalid_argument);
}

TEST_CASE("ensemble results are deterministic given the base seed") {
    const SystemParams p = SystemParams::table_s1();
    const auto spec = NoiseSpec::lorentzian_from_xi0(10.0, 190.0, 10.0);
    StochasticConfig cfg = fast_config();
    cfg.n_traj = 3;
    cfg.relax_time_us = 0.3;
    cfg.tau_max_us = 0.05;
    cfg.n_workers = 2;
    const auto a = ensemble_correlations(p, spec, cfg, 0, 3);
    const auto b = ensemble_correlations(p, spec, cfg, 0, 3);
    for (std::size_t i = 0; i < a.sum_c4.size(); ++i) CHECK(a.sum_c4[i] == b.sum_c4[i]);
}

TEST_CASE("checkpoints round-trip and resume") {
    const SystemParams p = SystemParams::table_s1();
    const auto spec = NoiseSpec::lorentzian_from_xi0(8.0, 190.0, 10.0);
    StochasticConfig cfg = fast_config();
    cfg.n_traj = 4;
    cfg.relax_time_us = 0.3;
    cfg.tau_max_us = 0.05;

    const auto first = ensemble_correlations(p, spec, cfg, 0, 2);
    first.save_checkpoint("ckpt_test.bin");
    const auto loaded = TrajectoryEnsemble::load_checkpoint("ckpt_test.bin");
    CHECK(loaded.idx_begin == first.idx_begin);
    CHECK(loaded.idx_end == first.idx_end);
    CHECK(loaded.sum_c4 == first.sum_c4);
    CHECK(loaded.tau_us == first.tau_us);

    const auto rest = ensemble_correlations(p, spec, cfg, 2, 4);
    const auto resumed = TrajectoryEnsemble::merge(loaded, rest);
    const auto direct = ensemble_correlations(p, spec, cfg, 0, 4);
    for (std::size_t i = 0; i < direct.sum_c4.size(); ++i)
        CHECK(resumed.sum_c4[i] == direct.sum_c4[i]);
    std::filesystem::remove("ckpt_test.bin");
}

TEST_CASE("blackman-windowed spectra conserve total power") {
    const SystemParams p = SystemParams::table_s1();
    const auto spec = NoiseSpec::lorentzian_from_xi0(10.0, 190.0, 10.0);
    StochasticConfig cfg = fast_config();
    cfg.n_traj = 2;
    cfg.relax_time_us = 1.0;
    cfg.tau_max_us = 0.5;
    const auto ens = ensemble_correlations(p, spec, cfg, 0, 2);
    const auto run = spectra_from_ensemble(p, spec, cfg, ens);

    const double c0 = (ens.sum_c4[0] / double(ens.count())).real();
    const double total_power = two_pi * p.kappa_mhz * c0;
    double integral = 0.0;
    for (std::size_t i = 1; i < run.s4.freq_ghz.size(); ++i)
        integral += 0.5 * (run.s4.psd[i] + run.s4.psd[i - 1]) *
                    (run.s4.freq_ghz[i] - run.s4.freq_ghz[i - 1]) * 1e3;
    CHECK(integral == doctest::Approx(total_power).epsilon(0.01));
}

TEST_CASE("standard error of integrated power scales like one over sqrt(n)") {
    const SystemParams p = SystemParams::table_s1();
    const auto spec = NoiseSpec::lorentzian_from_xi0(12.0, 190.0, 10.0);
    StochasticConfig cfg = fast_config();
    cfg.relax_time_us = 0.8;
    cfg.avg_time_us = 0.8;
    double se[3];
    int k = 0;
    for (int n : {25, 100, 400}) {
        cfg.n_traj = n;
        cfg.base_seed = 11;
        se[k++] = run_stochastic_powers(p, spec, cfg).p4_stderr;
    }
    CHECK(se[0] / se[1] == doctest::Approx(2.0).epsilon(0.5));
    CHECK(se[1] / se[2] == doctest::Approx(2.0).epsilon(0.5));
}

TEST_CASE("single-qubit demo limits") {
    // zero noise: <sigma_x> stays at one
    const auto frozen = single_qubit_dephasing_demo(0.0, 10.0, 3, 5);
    for (double v : frozen.sigma_x) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));

    // broadband regime is markovian within 10%
    const auto broad = single_qubit_dephasing_demo(1.6, 1000.0, 300, 5);
    double worst = 0.0;
    for (std::size_t i = 0; i < broad.sigma_x.size(); ++i) {
        if (broad.markov_sigma_x[i] < 0.2) break;
        worst = std::max(worst,
                         std::abs(broad.sigma_x[i] - broad.markov_sigma_x[i]) /
                             broad.markov_sigma_x[i]);
    }
    CHECK(worst < 0.10);

    const auto same = single_qubit_dephasing_demo(1.6, 1000.0, 50, 99);
    const auto again = single_qubit_dephasing_demo(1.6, 1000.0, 50, 99);
    CHECK(same.sigma_x == again.sigma_x);  // deterministic per seed
}

TEST_CASE("coherent modulation needs resonant drive") {
    SystemParams p = SystemParams::table_s1();
    StochasticConfig cfg = fast_config();
    cfg.relax_time_us = 2.0;
    cfg.avg_time_us = 2.0;
    const auto scan = coherent_modulation_scan(p, 40.0, {60.0, 191.8}, cfg);
    REQUIRE(scan.size() == 2);
    CHECK(scan[1].p4_photons_per_us > 10.0 * scan[0].p4_photons_per_us);
    CHECK(scan[1].eta > 0.5);

    // zero amplitude matches the no-noise case: essentially nothing extracted
    const auto none = coherent_modulation_scan(p, 0.0, {191.8}, cfg);
    CHECK(none[0].p4_photons_per_us < 0.05 * scan[1].p4_photons_per_us);
}

TEST_CASE("relaxation horizon stays within the documented clamp") {
    const SystemParams p = SystemParams::table_s1();
    for (double xi0 : {0.5, 5.0, 50.0}) {
        const double h = relax_horizon_us(p, NoiseSpec::lorentzian_from_xi0(xi0, 190.0, 10.0));
        CHECK(h >= 4.0);
        CHECK(h <= 12.0);
    }
}

}  // TEST_SUITE
