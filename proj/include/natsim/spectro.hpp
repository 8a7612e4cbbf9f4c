#pragma once

#include "natsim/dynamics.hpp"

#include <string>
#include <vector>

namespace natsim {

/// Named fit parameter; units are embedded in the name (e.g. "omega_rabi_MHz").
struct FitParameter {
    std::string name;
    double value = 0.0;
    double std_error = 0.0;
};

struct FitResult {
    std::vector<FitParameter> parameters;
    double residual_norm = 0.0;
    bool converged = false;
    Eigen::MatrixXd covariance;

    double value(const std::string& name) const;  // throws if absent
};

/// Waveguide transmission of a driven two-level emitter, Eq. (S-lineshape).
/// All rates in the same (nu) units; detuning_mhz = omega_i - omega_in.
cplx transmission_coefficient(double detuning_mhz, double gamma_r_mhz, double gamma_phi_mhz,
                              double omega_rabi_mhz);

/// Purcell decay of a qubit coupled to a lossy resonator, Eq. (S-Purcell).
double purcell_rate(double g_mhz, double kappa_mhz, double detuning_3r_mhz);

struct FluxTuneParams {
    double omega_max_ghz;      // maximal transition frequency
    double anharmonicity_mhz;  // negative for transmons
    double phi0 = 1.0;         // flux quantum in the chosen flux unit

    void validate() const;
};

/// omega(Phi) = (omega_max - alpha) sqrt(|cos(pi Phi/Phi0)|) + alpha, in GHz.
double flux_tune_ghz(const FluxTuneParams& ft, double phi);

/// Analytic d(omega)/d(Phi) in GHz per flux unit (for CalibrationMap).
double flux_tune_slope_ghz_per_unit(const FluxTuneParams& ft, double phi);

/// Incoherent (coherent-peak-subtracted) resonance-fluorescence spectrum of a
/// resonantly driven two-level system with radiative decay gamma and pure
/// dephasing gamma_phi, from the optical-Bloch regression matrix:
///   S(nu) = 2 Re{ [ (i 2pi(nu - center) I - A)^(-1) dv0 ]_sigma+ },
/// A the 3x3 Bloch generator, dv0 the regression start sigma^- rho_ss minus
/// its coherent part. `amplitude` rescales the whole curve.
double mollow_spectrum(double nu_ghz, double center_ghz, double omega_rabi_mhz,
                       double gamma_mhz, double gamma_phi_mhz, double amplitude);

enum class MollowMode { full_mollow, three_lorentzians };

/// Fit a measured/simulated inelastic spectrum. full_mollow fits
/// (amplitude, center, Omega_R, gamma, gamma_phi) against mollow_spectrum;
/// three_lorentzians fits a central line plus symmetric sidebands whose
/// offset is Omega_R. Initialization from spectral moments.
FitResult mollow_fit(const SpectrumResult& spectrum, MollowMode mode);

/// Sum-of-Lorentzians fit, F(nu) = sum a_i / (1 + 4((nu - nu0_i)/dnu_i)^2),
/// n_peaks = 1 or 2. A two-peak fit whose centers collapse within half the
/// mean FWHM is degenerate and is refit as a single peak (reported via the
/// "n_peaks" parameter of the result).
FitResult lorentzian_peak_fit(const SpectrumResult& spectrum, int n_peaks);

}  // namespace natsim
