#pragma once

#include <stdexcept>

namespace natsim {

/// Inputs of the four-level rate-equation model (all MHz).
struct RateParams {
    double omega_rabi_mhz = 14.0;
    double gamma_b_mhz = 12.4;
    double gamma_pur_mhz = 20.0;
    double gamma_phi_b_mhz = 0.0;
    double j_d3_mhz = 21.0;

    void validate() const;
};

struct TransferRates {
    double k_gb_mhz;  // Omega_R^2 / (gamma_b + 2 gamma_phi^b)
    double k_bd_mhz;  // gamma_phi^b
    double k_d3_mhz;  // 4 J_d3^2 / (gamma_Pur + 2 gamma_phi^b)
};

TransferRates transfer_rates(const RateParams& rp);

struct Populations {
    double p_g, p_b, p_d, p_3;
    double residual;  // max |dp/dt| at the solution
};

/// Steady state of the closed four-level rate equations (sum p = 1).
Populations steady_populations(const RateParams& rp);

/// eta = gamma_Pur p_3 / (gamma_Pur p_3 + gamma_b p_b). Depends only on
/// population ratios, so it matches the paper's p_g = 1 convention exactly.
double rate_efficiency(const RateParams& rp);

/// Closed form of the efficiency at gamma_phi^b = sqrt(2) J_d3.
double rate_efficiency_at_optimum(double gamma_b_mhz, double gamma_pur_mhz, double j_d3_mhz);

/// Numeric argmax of rate_efficiency over gamma_phi^b (golden section).
/// Throws std::domain_error when j_d3 = 0 (efficiency identically zero).
double efficiency_argmax_mhz(const RateParams& rp_without_dephasing);

}  // namespace natsim
