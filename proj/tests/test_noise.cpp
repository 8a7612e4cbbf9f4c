#include "natsim/noise.hpp"
#include "natsim/spectro.hpp"
#include "oracle_helpers.hpp"

#include <doctest.h>

#include <numeric>

using namespace natsim;

TEST_SUITE("noise") {

TEST_CASE("target psd anchor points") {
    const auto w = NoiseSpec::white(2.0);
    CHECK(target_psd(w, 0.0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(target_psd(w, 325.0) == doctest::Approx(1.0).epsilon(1e-12));  // cutoff midpoint

    const auto l = NoiseSpec::lorentzian(3.0, 190.0, 10.0);
    CHECK(target_psd(l, 190.0) == doctest::Approx(3.0));
    CHECK(target_psd(l, 195.0) == doctest::Approx(1.5));  // FWHM definition
    CHECK(target_psd(l, 185.0) == doctest::Approx(1.5));
    CHECK_THROWS_AS(target_psd(w, -1.0), std::invalid_argument);
}

TEST_CASE("nyquist validation") {
    NoiseSpec s = NoiseSpec::lorentzian(1.0, 1500.0, 10.0);
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("zero-amplitude synthesis returns zeros") {
    const auto series = synthesize_fir(NoiseSpec::white(0.0), 1 << 16, 7);
    for (double v : series.samples) CHECK(v == 0.0);
}

TEST_CASE("fir synthesis needs headroom over the filter length") {
    CHECK_THROWS_AS(synthesize_fir(NoiseSpec::white(1.0), 1024, 7), std::invalid_argument);
}

TEST_CASE("white synthesis is flat within 1 dB below the cutoff") {
    const auto spec = NoiseSpec::white(1.0);
    const auto series = synthesize_fir(spec, 1 << 20, 11);
    const auto psd = estimate_psd(series, 4096);
    double lo = 1e300, hi = 0.0;
    for (std::size_t i = 0; i < psd.freq_ghz.size(); ++i) {
        const double nu = psd.freq_ghz[i] * 1e3;
        if (nu < 5.0 || nu > 325.0 - 3.0 * 5.44) continue;
        lo = std::min(lo, psd.psd[i]);
        hi = std::max(hi, psd.psd[i]);
    }
    CHECK(lo > 1.0 / 1.259);  // -1 dB
    CHECK(hi < 1.259);        // +1 dB
}

TEST_CASE("lorentzian synthesis recovers the target width") {
    const auto spec = NoiseSpec::lorentzian(2.0, 190.0, 10.0);
    const auto series = synthesize_fir(spec, 1 << 20, 13);
    const auto psd = estimate_psd(series, 8192);
    const auto fit = lorentzian_peak_fit(psd, 1);
    CHECK(fit.value("center_1_GHz") * 1e3 == doctest::Approx(190.0).epsilon(0.01));
    CHECK(fit.value("fwhm_1_MHz") == doctest::Approx(10.0).epsilon(0.10));
}

TEST_CASE("synthesis is deterministic per seed") {
    const auto spec = NoiseSpec::white(1.5);
    const auto a = synthesize_fir(spec, 1 << 16, 42);
    const auto b = synthesize_fir(spec, 1 << 16, 42);
    const auto c = synthesize_fir(spec, 1 << 16, 43);
    CHECK(a.samples == b.samples);  // bit identical
    CHECK(a.samples != c.samples);
}

TEST_CASE("synthesized variance matches the target psd integral") {
    for (unsigned seedling = 0; seedling < 2; ++seedling) {
        const NoiseSpec spec = seedling == 0 ? NoiseSpec::white(1.0)
                                             : NoiseSpec::lorentzian(2.0, 120.0, 10.0);
        const auto series = synthesize_fir(spec, 1 << 20, 17 + seedling);
        double var = 0.0;
        for (double v : series.samples) var += v * v;
        var /= double(series.samples.size());
        // two-sided integral of the target, /2pi
        const double fs = spec.sample_rate_per_us;
        double integral = 0.0;
        const int n = 200000;
        for (int i = 0; i < n; ++i) {
            const double nu = 0.5 * fs * double(i) / double(n);
            integral += target_psd(spec, nu) * (0.5 * fs / double(n));
        }
        const double want = 2.0 * integral / two_pi;
        CHECK(var == doctest::Approx(want).epsilon(0.05));
    }
}

TEST_CASE("zero-mean sanity of synthesized series") {
    const auto series = synthesize_fir(NoiseSpec::white(1.0), 1 << 19, 23);
    const double sigma = series.rms();
    CHECK(std::abs(series.mean()) <
          3.0 * sigma / std::sqrt(double(series.samples.size())) * 10.0);
}

TEST_CASE("wiener process with zero bandwidth is a pure cosine") {
    const double xi0 = 2.0, nu_l = 50.0, dt = 1e-3;
    const auto series = wiener_phase_process(xi0, nu_l, 0.0, dt, 4096, 5);
    // reconstruct the (random) initial phase from the first samples and
    // compare the full series against a deterministic cosine
    const double c0 = series.samples[0] / xi0;
    const double c1 = series.samples[1] / xi0;
    double phi0 = std::acos(std::clamp(c0, -1.0, 1.0));
    const double predicted_next = std::cos(two_pi * nu_l * dt + phi0);
    if (std::abs(predicted_next - c1) > 1e-6) phi0 = -phi0;
    for (std::size_t i = 0; i < series.samples.size(); ++i) {
        const double want = xi0 * std::cos(two_pi * nu_l * double(i) * dt + phi0);
        CHECK(series.samples[i] == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("wiener phase diffuses with variance 2pi fwhm t") {
    // <xi(T) xi(0)> = (xi0^2/2) e^{-Var[phi]/2} at integer cycles of nu_l
    const double xi0 = 1.0, nu_l = 40.0, fwhm = 1.2, dt = 5e-4;
    const double T = 0.4;  // Var = 2pi*1.2*0.4 ~ 3.0 rad^2
    const std::size_t nT = std::size_t(T / dt);
    const int n_traj = 4000;
    double acc = 0.0;
    for (int j = 0; j < n_traj; ++j) {
        const auto s = wiener_phase_process(xi0, nu_l, fwhm, dt, nT + 1, 1000 + unsigned(j));
        acc += s.samples[0] * s.samples[nT];
    }
    acc /= double(n_traj);
    const double implied_var = -2.0 * std::log(std::max(2.0 * acc / (xi0 * xi0), 1e-6));
    CHECK(implied_var == doctest::Approx(two_pi * fwhm * T).epsilon(0.05));
}

TEST_CASE("wiener integrated power is bandwidth independent") {
    const double xi0 = 10.0;
    double men[2];
    int k = 0;
    for (double fwhm : {5.0, 50.0}) {
        const auto s = wiener_phase_process(xi0, 190.0, fwhm, 4e-4, 1 << 20, 9);
        double var = 0.0;
        for (double v : s.samples) var += v * v;
        men[k++] = var / double(s.samples.size());
    }
    CHECK(men[0] / men[1] == doctest::Approx(1.0).epsilon(0.03));
    CHECK(men[0] == doctest::Approx(xi0 * xi0 / 2.0).epsilon(0.03));
}

TEST_CASE("welch estimator calibration") {
    // pure sinusoid of amplitude a: integrated power a^2/2
    NoiseSeries tone;
    tone.dt_us = 4e-4;
    const double a = 3.0, nu = 125.0;
    tone.samples.resize(1 << 17);
    for (std::size_t i = 0; i < tone.samples.size(); ++i)
        tone.samples[i] = a * std::cos(two_pi * nu * double(i) * tone.dt_us);
    const auto psd = estimate_psd(tone, 4096);
    CHECK(noise_power_mhz2(psd) == doctest::Approx(a * a / 2.0).epsilon(0.02));
    // the peak sits in the right bin
    std::size_t imax = 0;
    for (std::size_t i = 1; i < psd.psd.size(); ++i)
        if (psd.psd[i] > psd.psd[imax]) imax = i;
    CHECK(psd.freq_ghz[imax] * 1e3 == doctest::Approx(nu).epsilon(0.01));

    // unit-variance white gaussian: total power ~ 1 within 10%
    NoiseSeries white;
    white.dt_us = 4e-4;
    white.samples.resize(1 << 18);
    std::mt19937_64 eng(3);
    for (auto& v : white.samples) {
        // deterministic gaussian via Box-Muller on fixed uniforms
        const double u1 = double(eng() >> 11) * 0x1.0p-53;
        const double u2 = double(eng() >> 11) * 0x1.0p-53;
        v = std::sqrt(-2.0 * std::log(std::max(u1, 1e-300))) * std::cos(two_pi * u2);
    }
    const auto wpsd = estimate_psd(white, 2048);
    CHECK(noise_power_mhz2(wpsd) == doctest::Approx(1.0).epsilon(0.10));

    // zero series -> zero psd
    NoiseSeries zero;
    zero.dt_us = 4e-4;
    zero.samples.assign(1 << 14, 0.0);
    const auto zpsd = estimate_psd(zero, 1024);
    for (double v : zpsd.psd) CHECK(v == 0.0);

    CHECK_THROWS_AS(estimate_psd(zero, 1 << 13), std::invalid_argument);  // > n/4
}

TEST_CASE("markov dephasing rates") {
    const auto r1 = dephasing_rate_markov(NoiseSpec::white(1.0));
    CHECK(r1.rate_mhz == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(r1.markov_valid);

    // zero-centered lorentzian reduces to the white value; the markov
    // condition fwhm >> rate fails there (10 < 10 * 2)
    const auto r2 = dephasing_rate_markov(NoiseSpec::lorentzian(1.0, 0.0, 10.0));
    CHECK(r2.rate_mhz == doctest::Approx(2.0).epsilon(1e-12));
    CHECK_FALSE(r2.markov_valid);

    // omega_L = fwhm/2: rate = A_L
    const auto r3 = dephasing_rate_markov(NoiseSpec::lorentzian(1.0, 5.0, 10.0));
    CHECK(r3.rate_mhz == doctest::Approx(1.0).epsilon(1e-12));
    const auto r4 = dephasing_rate_markov(NoiseSpec::lorentzian(0.1, 190.0, 10.0));
    CHECK(r4.markov_valid);
    CHECK_THROWS_AS(dephasing_rate_markov(NoiseSpec::coherent_tone(1.0, 50.0)),
                    std::invalid_argument);
}

TEST_CASE("finite-cutoff dephasing is markovian at low power") {
    const auto zero = dephasing_rate_finite_cutoff(NoiseSpec::white(0.0));
    CHECK(zero.rate_mhz == 0.0);

    FiniteCutoffOptions opts;
    opts.n_traj = 1500;
    const auto low = dephasing_rate_finite_cutoff(NoiseSpec::white(1.0), opts);
    CHECK(low.converged);
    CHECK(low.rate_mhz == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("finite-cutoff dephasing bends sublinearly at high power") {
    FiniteCutoffOptions opts;
    opts.n_traj = 500;
    const auto mid = dephasing_rate_finite_cutoff(NoiseSpec::white(64.0), opts);
    const auto high = dephasing_rate_finite_cutoff(NoiseSpec::white(128.0), opts);
    CHECK(high.rate_mhz > mid.rate_mhz);              // monotone
    CHECK(high.rate_mhz < 2.0 * mid.rate_mhz * 0.98); // but sublinear
    CHECK(high.rate_mhz < 2.0 * 128.0);               // below the markov line
}

TEST_CASE("effective coupling is twice the series rms") {
    NoiseSeries zero;
    zero.samples.assign(128, 0.0);
    CHECK(effective_coupling_mhz(zero) == 0.0);

    // tone with transition-frequency excursion amplitude a: K = a/sqrt(2)
    const double a = 6.0;  // excursion of 2*xi
    const auto tone = synthesize_fir(NoiseSpec::coherent_tone(a / 2.0, 40.0), 1 << 16, 1);
    CHECK(effective_coupling_mhz(tone) == doctest::Approx(a / std::sqrt(2.0)).epsilon(1e-3));

    // lorentzian series scaled to K = 100 MHz
    auto s = wiener_phase_process(10.0, 190.0, 10.0, 4e-4, 1 << 18, 3);
    const double k0 = effective_coupling_mhz(s);
    for (auto& v : s.samples) v *= 100.0 / k0;
    CHECK(effective_coupling_mhz(s) == doctest::Approx(100.0).epsilon(1e-9));
}

TEST_CASE("calibration map scales flux series into frequency units") {
    CalibrationMap cal;
    cal.flux_to_freq_slope_mhz_per_mwb = 40.0;
    cal.psd_per_flux_power = 12.5;
    const std::vector<double> flux = {0.1, -0.2, 0.3};
    const auto series = cal.frequency_series(flux, 1e-3);
    CHECK(series.samples[1] == doctest::Approx(0.5 * 40.0 * -0.2));
    CHECK(cal.a_w_from_flux_power(2.0) == doctest::Approx(25.0));
}

TEST_CASE("noise series round-trips through csv and binary") {
    const auto series = synthesize_fir(NoiseSpec::white(1.0), 1 << 15, 31);
    write_noise_csv(series, "noise_test.csv");
    const auto back = read_noise_csv("noise_test.csv");
    CHECK(back.samples.size() == series.samples.size());
    CHECK(back.dt_us == doctest::Approx(series.dt_us).epsilon(1e-9));
    double max_err = 0.0;
    for (std::size_t i = 0; i < back.samples.size(); ++i)
        max_err = std::max(max_err, std::abs(back.samples[i] - series.samples[i]));
    CHECK(max_err < 1e-10);

    write_noise_bin(series, "noise_test.bin");
    const auto bin = read_noise_bin("noise_test.bin");
    CHECK(bin.samples == series.samples);  // bit exact
    CHECK(bin.dt_us == series.dt_us);
    std::remove("noise_test.csv");
    std::remove("noise_test.bin");
}

}  // TEST_SUITE
