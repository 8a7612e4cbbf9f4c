#pragma once

#include "natsim/model.hpp"

#include <optional>
#include <vector>

namespace natsim {

enum class Port { waveguide_2, resonator_4, flux_line };
enum class SpectralWindow { none, blackman };

/// Frequency grid (GHz, lab frame) + power spectral density in
/// photons s^-1 Hz^-1. For noise-lab estimates (port = flux_line) the grid is
/// still GHz and the density is in MHz (see noise.hpp for the convention).
struct SpectrumResult {
    std::vector<double> freq_ghz;
    std::vector<double> psd;
    Port port = Port::resonator_4;
    bool rayleigh_removed = false;

    void validate() const;  // strictly increasing uniform grid, psd >= numerical floor
};

struct TransportSummary {
    double p2_photons_per_us = 0.0;
    double p4_photons_per_us = 0.0;
    double eta = 0.0;
};

/// Thrown when the Liouvillian kernel is not one-dimensional.
struct DegenerateSteadyState : std::runtime_error {
    int kernel_dim;
    explicit DegenerateSteadyState(int k)
        : std::runtime_error("steady_state: Liouvillian kernel dimension is " +
                             std::to_string(k) + ", expected 1"),
          kernel_dim(k) {}
};

/// Unique steady state of L: trace-one Hermitian rho with ||L rho|| < 1e-10.
/// Direct solve with a trace row; eigenvector fallback on ill conditioning.
Mat steady_state(const Superoperator& liouvillian);

/// Hermiticity/trace/positivity sanity of a density matrix.
bool validate_density_matrix(const Mat& rho, double trace_tol = 1e-10,
                             double eig_floor = -1e-9);

/// rho(t) = exp(L t) rho0 on the given grid (increasing from 0), adaptive RK45.
std::vector<Mat> evolve(const Mat& rho0, const Superoperator& liouvillian,
                        const std::vector<double>& t_grid_us);

/// <A(tau) B(0)> by quantum regression: propagate B rho_ss under L and trace
/// against A on the tau grid. Exact at tau = 0: Tr(A B rho_ss).
std::vector<cplx> two_time_correlation(const Superoperator& liouvillian, const Mat& rho_ss,
                                       const Mat& a_op, const Mat& b_op,
                                       const std::vector<double>& tau_grid_us);

/// Two-sided emission spectrum of a stationary correlation (C(-tau) = C(tau)^*),
/// scaled by 2pi*rate_mhz; photons s^-1 Hz^-1 against a lab-frame GHz grid
/// centered on carrier_ghz. When subtract_coherent, mean_product (the exact
/// <A>_ss <B>_ss) is removed before transforming.
SpectrumResult emission_spectrum(const std::vector<cplx>& corr,
                                 const std::vector<double>& tau_grid_us, double rate_mhz,
                                 Port port, bool subtract_coherent = false,
                                 cplx mean_product = cplx(0, 0), double carrier_ghz = 0.0,
                                 SpectralWindow window = SpectralWindow::none);

struct FreqWindowGhz {
    double lo_ghz;
    double hi_ghz;
};

/// Trapezoidal integral of the PSD in photons/us, optionally excluding a window.
double integrated_power(const SpectrumResult& spec,
                        std::optional<FreqWindowGhz> exclude = std::nullopt);

/// eta = P4 / (P4 + 2 P2); throws std::invalid_argument when both vanish.
double transfer_efficiency(double p4_photons_per_us, double p2_photons_per_us);

// ---------------------------------------------------------------------------
// Steady-state pipeline for the Table-S1 system.

struct SpectraConfig {
    double tau_max_us = 1.0;      // lengthened automatically for slow features
    double dtau_us = 5e-4;
    bool subtract_coherent = true;
    double rayleigh_exclusion_mhz = 35.0;  // half-width around omega_in for P4
};

struct LindbladRun {
    SpectrumResult s2;
    SpectrumResult s4;
    Mat rho_ss;
    TransportSummary summary;
};

/// Full steady-state run: Liouvillian, rho_ss, both port spectra and the
/// windowed transport summary (P4 excludes the Rayleigh/drive region).
LindbladRun lindblad_run(const SystemParams& params, const HilbertSpace& space,
                         const SpectraConfig& cfg = {});

/// Fast path used by sweeps/tests: inelastic port moments of a steady state.
struct PortMoments {
    double bright_population;       // <sigma_b^+ sigma_b^->
    cplx bright_amplitude;          // <sigma_b^->
    double photon_number;           // <a^dag a>
    cplx field_amplitude;           // <a>
};
PortMoments port_moments(const Mat& rho, const HilbertSpace& space);

}  // namespace natsim
