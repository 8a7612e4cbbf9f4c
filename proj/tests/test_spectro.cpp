#include "natsim/spectro.hpp"
#include "oracle_helpers.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

using namespace natsim;

namespace {

/// Independent Purcell oracle: qubit-like complex eigenvalue of the 2x2
/// non-Hermitian qubit-resonator Hamiltonian; decay = -2 Im(lambda).
double purcell_by_eigenvalue(double g, double kappa, double delta) {
    Eigen::Matrix2cd h;
    h << cplx(delta, 0.0), cplx(g, 0.0), cplx(g, 0.0), cplx(0.0, -kappa / 2.0);
    const Eigen::ComplexEigenSolver<Eigen::Matrix2cd> es(h);
    // the qubit-like branch has the larger real part for positive detuning
    const auto e0 = es.eigenvalues()[0], e1 = es.eigenvalues()[1];
    const cplx qubit_like = e0.real() > e1.real() ? e0 : e1;
    return -2.0 * qubit_like.imag();
}

SpectrumResult sample_mollow(double center, double omega, double gamma, double gphi,
                             double amp, double span_mhz, std::size_t n) {
    SpectrumResult s;
    for (std::size_t i = 0; i < n; ++i) {
        const double nu = center + (-span_mhz + 2.0 * span_mhz * double(i) / double(n - 1)) * 1e-3;
        s.freq_ghz.push_back(nu);
        s.psd.push_back(mollow_spectrum(nu, center, omega, gamma, gphi, amp));
    }
    return s;
}

}  // namespace

TEST_SUITE("spectro") {

TEST_CASE("transmission extinction anchors") {
    CHECK(std::abs(transmission_coefficient(0.0, 10.0, 0.0, 1e-9)) < 1e-12);
    CHECK(std::abs(transmission_coefficient(1e9, 10.0, 2.0, 5.0) - cplx(1.0, 0.0)) < 1e-6);
    CHECK(transmission_coefficient(0.0, 10.0, 5.0, 1e-12).real() ==
          doctest::Approx(0.5).epsilon(1e-9));
    CHECK_THROWS_AS(transmission_coefficient(0.0, 0.0, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("transmission magnitude never exceeds one") {
    std::mt19937 eng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
        const double gr = 0.1 + 30.0 * u(eng);
        const double gphi = 30.0 * u(eng);
        const double om = 40.0 * u(eng);
        const double det = -200.0 + 400.0 * u(eng);
        CHECK(std::abs(transmission_coefficient(det, gr, gphi, om)) <= 1.0 + 1e-12);
    }
}

TEST_CASE("purcell rate against the eigenvalue oracle") {
    for (auto [g, k, d] : {std::array<double, 3>{90.0, 110.0, 198.0},
                           std::array<double, 3>{90.0, 110.0, 161.0},
                           std::array<double, 3>{45.0, 80.0, 300.0},
                           std::array<double, 3>{120.0, 60.0, 500.0}}) {
        CHECK(purcell_rate(g, k, d) ==
              doctest::Approx(purcell_by_eigenvalue(g, k, d)).epsilon(1e-9));
    }
    CHECK(purcell_rate(0.0, 110.0, 198.0) == doctest::Approx(0.0));
    CHECK_THROWS_AS(purcell_rate(90.0, 0.0, 198.0), std::invalid_argument);
}

TEST_CASE("purcell dispersive limit") {
    const double g = 90.0, k = 110.0, d = 20.0 * g;
    const double ratio = purcell_rate(g, k, d) / (k * (g / d) * (g / d));
    CHECK(ratio == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("purcell rate decreases away from resonance") {
    double prev = purcell_rate(90.0, 110.0, 120.0);
    for (double d = 140.0; d <= 1000.0; d += 20.0) {
        const double cur = purcell_rate(90.0, 110.0, d);
        CHECK(cur < prev);
        prev = cur;
    }
}

TEST_CASE("flux tuning curve anchors and derivative") {
    FluxTuneParams ft{6.948, -140.0, 1.0};
    CHECK(flux_tune_ghz(ft, 0.0) == doctest::Approx(6.948).epsilon(1e-12));
    CHECK(flux_tune_ghz(ft, 0.5) == doctest::Approx(-0.140).epsilon(1e-12));
    CHECK(flux_tune_ghz(ft, 0.3) == doctest::Approx(5.294167884980).epsilon(1e-10));

    for (double phi : {0.05, 0.2, 0.35, 0.45}) {
        const double want =
            oracle::derivative([&](double x) { return flux_tune_ghz(ft, x); }, phi, 1e-6);
        CHECK(flux_tune_slope_ghz_per_unit(ft, phi) ==
              doctest::Approx(want).epsilon(1e-7));
    }
    CHECK(flux_tune_slope_ghz_per_unit(ft, 0.3) == doctest::Approx(-11.748756).epsilon(1e-5));

    FluxTuneParams bad{6.948, +140.0, 1.0};
    CHECK_THROWS_AS(flux_tune_ghz(bad, 0.1), std::invalid_argument);
}

TEST_CASE("mollow model basics") {
    // strong drive: sidebands near +-Omega_R
    const double om = 40.0, g = 6.0;
    const auto s = sample_mollow(6.0, om, g, 0.0, 1.0, 120.0, 2401);
    // local maxima
    std::vector<double> peaks;
    for (std::size_t i = 1; i + 1 < s.psd.size(); ++i)
        if (s.psd[i] > s.psd[i - 1] && s.psd[i] > s.psd[i + 1])
            peaks.push_back((s.freq_ghz[i] - 6.0) * 1e3);
    REQUIRE(peaks.size() == 3);
    CHECK(peaks[0] == doctest::Approx(-om).epsilon(0.03));
    CHECK(std::abs(peaks[1]) < 1.0);
    CHECK(peaks[2] == doctest::Approx(om).epsilon(0.03));
}

TEST_CASE("full mollow fit recovers exact parameters") {
    const double om = 25.0, g = 7.0, gphi = 0.8, amp = 0.37;
    const auto s = sample_mollow(6.2, om, g, gphi, amp, 90.0, 1201);
    const auto fit = mollow_fit(s, MollowMode::full_mollow);
    CHECK(fit.converged);
    CHECK(fit.value("omega_rabi_MHz") == doctest::Approx(om).epsilon(1e-6));
    CHECK(fit.value("gamma_MHz") == doctest::Approx(g).epsilon(1e-6));
    CHECK(fit.value("gamma_phi_MHz") == doctest::Approx(gphi).epsilon(1e-5));
    CHECK(fit.value("amplitude") == doctest::Approx(amp).epsilon(1e-6));
    CHECK(fit.value("center_GHz") == doctest::Approx(6.2).epsilon(1e-9));
}

TEST_CASE("three-lorentzian fit finds the sideband splitting") {
    const double om = 42.1, g = 6.57;
    const auto s = sample_mollow(6.371, om, g, 0.0, 1.0, 130.0, 1601);
    const auto fit = mollow_fit(s, MollowMode::three_lorentzians);
    CHECK(fit.converged);
    CHECK(fit.value("omega_rabi_MHz") == doctest::Approx(om).epsilon(1.0 / om));  // +- 1 MHz
}

TEST_CASE("weak-drive mollow fit still recovers gamma") {
    const double om = 2.0, g = 9.0;
    const auto s = sample_mollow(6.0, om, g, 0.0, 0.8, 60.0, 801);
    const auto fit = mollow_fit(s, MollowMode::full_mollow);
    CHECK(fit.value("gamma_MHz") == doctest::Approx(g).epsilon(0.10));
}

TEST_CASE("lorentzian doublet fit exact recovery and degeneracy rule") {
    // synthetic doublet at the measured dark-state frequencies
    SpectrumResult s;
    const double c1 = 6.179, c2 = 6.216, w1 = 12.0, w2 = 9.0, a1 = 1.0, a2 = 0.6;
    for (int i = 0; i < 1601; ++i) {
        const double nu = 6.10 + 0.16 * double(i) / 1600.0;
        const double d1 = 2.0 * (nu - c1) / (w1 * 1e-3), d2 = 2.0 * (nu - c2) / (w2 * 1e-3);
        s.freq_ghz.push_back(nu);
        s.psd.push_back(a1 / (1.0 + d1 * d1) + a2 / (1.0 + d2 * d2));
    }
    const auto fit = lorentzian_peak_fit(s, 2);
    CHECK(fit.converged);
    CHECK(fit.value("n_peaks") == 2.0);
    CHECK(fit.value("center_1_GHz") == doctest::Approx(c1).epsilon(1e-6 / c1));  // << 1 MHz
    CHECK(fit.value("center_2_GHz") == doctest::Approx(c2).epsilon(1e-6 / c2));
    CHECK(fit.value("fwhm_1_MHz") == doctest::Approx(w1).epsilon(1e-5));
    CHECK(fit.value("amp_2") == doctest::Approx(a2).epsilon(1e-5));

    // single lorentzian input: the two-peak fit must collapse
    SpectrumResult single;
    for (int i = 0; i < 801; ++i) {
        const double nu = 6.10 + 0.16 * double(i) / 800.0;
        const double d = 2.0 * (nu - 6.18) / 0.015;
        single.freq_ghz.push_back(nu);
        single.psd.push_back(0.7 / (1.0 + d * d));
    }
    const auto collapsed = lorentzian_peak_fit(single, 2);
    CHECK(collapsed.value("n_peaks") == 1.0);
    CHECK(collapsed.value("center_1_GHz") == doctest::Approx(6.18).epsilon(1e-7));

    CHECK_THROWS_AS(lorentzian_peak_fit(s, 3), std::invalid_argument);
}

TEST_CASE("fit result parameter lookup") {
    FitResult f;
    f.parameters.push_back({"x_MHz", 5.0, 0.1});
    CHECK(f.value("x_MHz") == 5.0);
    CHECK_THROWS_AS(f.value("missing"), std::invalid_argument);
}

}  // TEST_SUITE
