#pragma once

#include "natsim/quantum.hpp"

namespace natsim {

/// Circuit parameters. Frequencies are stored as nu = omega/2pi: transition
/// frequencies in GHz, couplings and rates in MHz. The factor 2pi is applied
/// once, inside build_liouvillian and the time/Fourier kernels.
struct SystemParams {
    double omega1_ghz = 6.277;
    double omega2_ghz = 6.277;
    double omega3_ghz = 6.161;
    double omega_r_ghz = 6.000;
    double omega_in_ghz = 6.368;

    double j12_mhz = 83.5;
    double j23_mhz = 33.4;
    double j13_mhz = 3.67;
    double g3_mhz = 90.0;

    double gamma_b_mhz = 12.4;
    double gamma_d_mhz = 0.29;
    double kappa_mhz = 110.0;
    double gamma_phi_mhz = 0.0;   // Q2 pure dephasing (= 2 * gamma_phi^b)
    double n_th = 0.0;

    double omega_rabi_mhz = 14.0; // bright-state Rabi; per-qubit drive is this / sqrt(2)

    static SystemParams table_s1() { return SystemParams{}; }

    double j_b3_mhz() const { return (j23_mhz + j13_mhz) / std::sqrt(2.0); }
    double j_d3_mhz() const { return (j23_mhz - j13_mhz) / std::sqrt(2.0); }
    // valid when omega1 = omega2
    double omega_b_ghz() const { return omega1_ghz + j12_mhz * 1e-3; }
    double omega_d_ghz() const { return omega1_ghz - j12_mhz * 1e-3; }

    void validate() const;  // throws std::invalid_argument on bad rates/occupation
};

/// Dense Liouvillian acting on column-stacked rho, entries in rad/us.
struct Superoperator {
    int hilbert_dim = 0;
    Mat matrix;  // hilbert_dim^2 x hilbert_dim^2

    int dim() const { return hilbert_dim * hilbert_dim; }
    Vec apply(const Mat& rho) const { return matrix * vectorize(rho); }

    static Vec vectorize(const Mat& rho);
    static Mat unvectorize(const Vec& v, int n);
};

/// Rotating-frame Hamiltonian of Eq. (S-Hamiltonian), entries in MHz
/// (nu-units): detunings, exchange couplings, Jaynes-Cummings term and the
/// symmetric two-qubit drive. Hermitian by construction.
Mat build_hamiltonian(const SystemParams& params, const HilbertSpace& space);

/// One Lindblad jump channel: rate in MHz, collapse operator in the full space.
struct JumpChannel {
    double rate_mhz;
    Mat op;
};

/// Collapse channels of Eq. (S-ME): collective bright/dark decay with thermal
/// occupation, Q2 pure dephasing (gamma_phi/2) L(sigma_2^z), resonator kappa L(a).
std::vector<JumpChannel> collapse_channels(const SystemParams& params, const HilbertSpace& space);

/// L(rho) = -i 2pi [H, rho] + sum_k 2pi rate_k D[c_k] rho on column-stacked rho.
/// H in MHz; resulting generator in rad/us.
Superoperator build_liouvillian(const SystemParams& params, const Mat& hamiltonian,
                                const HilbertSpace& space);

/// Liouvillian from explicit parts (used by tests and the stochastic engine).
Superoperator liouvillian_from_parts(const Mat& hamiltonian_mhz,
                                     const std::vector<JumpChannel>& channels);

/// Superoperator of -i 2pi [op, .] alone (rad/us per MHz of op amplitude).
Superoperator commutator_superoperator(const Mat& op);

}  // namespace natsim
