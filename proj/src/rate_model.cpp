#include "natsim/rate_model.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace natsim {

void RateParams::validate() const {
    for (double v : {omega_rabi_mhz, gamma_b_mhz, gamma_pur_mhz, gamma_phi_b_mhz, j_d3_mhz})
        if (v < 0.0 || !std::isfinite(v))
            throw std::invalid_argument("RateParams: all entries must be >= 0");
}

TransferRates transfer_rates(const RateParams& rp) {
    rp.validate();
    const double den_gb = rp.gamma_b_mhz + 2.0 * rp.gamma_phi_b_mhz;
    const double den_d3 = rp.gamma_pur_mhz + 2.0 * rp.gamma_phi_b_mhz;
    if (den_gb <= 0.0 || den_d3 <= 0.0)
        throw std::invalid_argument("transfer_rates: zero denominator");
    return {rp.omega_rabi_mhz * rp.omega_rabi_mhz / den_gb, rp.gamma_phi_b_mhz,
            4.0 * rp.j_d3_mhz * rp.j_d3_mhz / den_d3};
}

Populations steady_populations(const RateParams& rp) {
    rp.validate();
    if (rp.gamma_b_mhz <= 0.0 && rp.gamma_pur_mhz <= 0.0)
        throw std::invalid_argument("steady_populations: need gamma_b or gamma_Pur > 0");
    const auto k = transfer_rates(rp);
    const double gb = rp.gamma_b_mhz, gp = rp.gamma_pur_mhz;

    Eigen::Matrix4d m;
    m << -k.k_gb_mhz, k.k_gb_mhz + gb, 0.0, gp,
         k.k_gb_mhz, -k.k_gb_mhz - k.k_bd_mhz - gb, k.k_bd_mhz, 0.0,
         0.0, k.k_bd_mhz, -k.k_bd_mhz - k.k_d3_mhz, k.k_d3_mhz,
         0.0, 0.0, k.k_d3_mhz, -k.k_d3_mhz - gp;

    Eigen::Matrix4d a = m;
    a.row(0).setOnes();  // normalization replaces one redundant balance row
    Eigen::Vector4d b(1.0, 0.0, 0.0, 0.0);
    const Eigen::Vector4d p = a.fullPivLu().solve(b);

    Populations out{p[0], p[1], p[2], p[3], (m * p).cwiseAbs().maxCoeff()};
    return out;
}

double rate_efficiency(const RateParams& rp) {
    const auto p = steady_populations(rp);
    const double num = rp.gamma_pur_mhz * p.p_3;
    const double den = num + rp.gamma_b_mhz * p.p_b;
    return den > 0.0 ? num / den : 0.0;
}

double rate_efficiency_at_optimum(double gb, double gp, double jd3) {
    return 1.0 / (1.0 + std::sqrt(2.0) * gb / jd3 + gb / gp + gb * gp / (4.0 * jd3 * jd3));
}

double efficiency_argmax_mhz(const RateParams& rp0) {
    if (rp0.j_d3_mhz <= 0.0)
        throw std::domain_error("efficiency_argmax: eta is identically zero for J_d3 = 0");
    auto eta = [&](double gpb) {
        RateParams rp = rp0;
        rp.gamma_phi_b_mhz = gpb;
        return rate_efficiency(rp);
    };
    double a = 1e-6, b = 100.0 * rp0.j_d3_mhz;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = eta(c), fd = eta(d);
    while (b - a > 1e-9 * rp0.j_d3_mhz) {
        if (fc > fd) {
            b = d; d = c; fd = fc;
            c = b - gr * (b - a); fc = eta(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + gr * (b - a); fd = eta(d);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace natsim
