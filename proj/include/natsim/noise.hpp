#pragma once

#include "natsim/dynamics.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace natsim {

// Conventions (fixed; the paper mixes one- and two-sided normalizations):
//  * A NoiseSeries stores xi(t) in MHz, the coupling in H_phi = xi(t) sigma_2^z.
//    The induced Q2 transition-frequency offset is 2 xi(t).
//  * target_psd/estimate_psd return S(nu) = S_angular(2 pi nu) / 2 pi in MHz,
//    the two-sided density displayed for nu >= 0. With that normalization the
//    Markovian dephasing rate is gamma = 2 S(0) and the series variance is
//    (1/2pi) * integral of S over the two-sided nu axis.
//  * The Wiener-phase realization of a Lorentzian spec uses
//    xi0 = sqrt(A_L * fwhm / 2), which makes the paper's Lorentzian dephasing
//    formula exact in the Markov limit; the realized peak density is A_L/2
//    (the formula absorbs the mirror-peak fold).

enum class NoiseKind { white, lorentzian, coherent_tone };

struct NoiseSpec {
    NoiseKind kind = NoiseKind::white;

    // white with Fermi-Dirac cutoff
    double a_w_mhz = 0.0;
    double cutoff_mhz = 325.0;
    double cutoff_width_mhz = 5.44;

    // lorentzian
    double a_l_mhz = 0.0;
    double center_mhz = 190.0;
    double fwhm_mhz = 10.0;

    // coherent tone
    double tone_amp_mhz = 0.0;
    double tone_freq_mhz = 190.0;

    double sample_rate_per_us = 2500.0;  // 2.5 samples/ns default
    std::uint64_t seed = 0;

    static NoiseSpec white(double a_w_mhz, double cutoff_mhz = 325.0,
                           double cutoff_width_mhz = 5.44);
    static NoiseSpec lorentzian(double a_l_mhz, double center_mhz, double fwhm_mhz = 10.0);
    static NoiseSpec lorentzian_from_xi0(double xi0_mhz, double center_mhz,
                                         double fwhm_mhz = 10.0);
    static NoiseSpec coherent_tone(double amp_mhz, double freq_mhz);

    /// Amplitude of the Wiener-phase cosine realizing this Lorentzian spec.
    double wiener_xi0_mhz() const;

    void validate() const;  // frequencies >= 0 and Nyquist headroom
};

struct NoiseSeries {
    std::vector<double> samples;  // xi(t), MHz
    double dt_us = 0.0;
    NoiseSpec spec;

    double rms() const;
    double mean() const;
};

/// Analytic target PSD of the spec at nu >= 0 (convention above).
double target_psd(const NoiseSpec& spec, double nu_mhz);

/// Gaussian white sequence shaped by a frequency-sampled FIR filter so that
/// the expected periodogram matches target_psd. Deterministic per seed.
NoiseSeries synthesize_fir(const NoiseSpec& spec, std::size_t n_samples, std::uint64_t seed,
                           std::size_t fir_taps = 4096);

/// xi(t) = xi0 cos(2 pi nu_l t + phi(t)) with Brownian phase,
/// Var[phi(t) - phi(0)] = 2 pi fwhm t. Initial phase uniform per seed.
NoiseSeries wiener_phase_process(double xi0_mhz, double nu_l_mhz, double fwhm_mhz,
                                 double dt_us, std::size_t n, std::uint64_t seed);

enum class WelchWindow { rectangular, hann, blackman };

/// Welch-averaged, window-power-corrected PSD estimate (50% overlap).
/// Grid is in GHz (uniform with SpectrumResult); values in MHz per the
/// convention above; port = flux_line.
SpectrumResult estimate_psd(const NoiseSeries& series, std::size_t segment_length,
                            WelchWindow window = WelchWindow::hann);

/// Variance implied by an estimate_psd result: (1/pi) * integral over nu >= 0.
double noise_power_mhz2(const SpectrumResult& psd);

struct DephasingRate {
    double rate_mhz = 0.0;
    bool markov_valid = true;
};

/// White: gamma_phi = 2 A_W. Lorentzian: Eq. (S-lorentzDeph); markov_valid
/// flags fwhm >= 10 * rate.
DephasingRate dephasing_rate_markov(const NoiseSpec& spec);

struct DecayFitResult {
    double rate_mhz = 0.0;
    double rms_residual = 0.0;  // of the exponential fit, in <sigma_x> units
    bool converged = true;
};

struct FiniteCutoffOptions {
    int n_traj = 800;
    std::uint64_t seed = 20230615;
};

/// Pure-dephasing decay rate of <sigma_x(t)> under synthesized finite-cutoff
/// white noise (exact per-realization phase integration, ensemble averaged,
/// exponential fit). Reproduces the sub-linear high-power bend.
DecayFitResult dephasing_rate_finite_cutoff(const NoiseSpec& white_spec,
                                            const FiniteCutoffOptions& opts = {});

/// K = RMS of the induced Q2 transition-frequency fluctuation = 2 RMS(xi).
double effective_coupling_mhz(const NoiseSeries& series);

/// Flux-to-frequency calibration at an operating point; maps flux series
/// (mWb) and integrated flux-noise powers into the frequency-unit quantities
/// used everywhere else.
struct CalibrationMap {
    double flux_to_freq_slope_mhz_per_mwb = 0.0;
    double psd_per_flux_power = 0.0;  // A_W (MHz) per pWb^2, optional affine map

    NoiseSeries frequency_series(const std::vector<double>& flux_mwb, double dt_us) const;
    double a_w_from_flux_power(double flux_power_pwb2) const {
        return psd_per_flux_power * flux_power_pwb2;
    }
};

// series import/export (CSV columns: t_us, xi_MHz; binary: versioned)
void write_noise_csv(const NoiseSeries& series, const std::string& path);
NoiseSeries read_noise_csv(const std::string& path);
void write_noise_bin(const NoiseSeries& series, const std::string& path);
NoiseSeries read_noise_bin(const std::string& path);

}  // namespace natsim
