#include "natsim/spectro.hpp"

#include "detail/lmfit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace natsim {

double FitResult::value(const std::string& name) const {
    for (const auto& p : parameters)
        if (p.name == name) return p.value;
    throw std::invalid_argument("FitResult: no parameter named " + name);
}

cplx transmission_coefficient(double detuning_mhz, double gamma_r_mhz, double gamma_phi_mhz,
                              double omega_rabi_mhz) {
    if (gamma_r_mhz <= 0.0)
        throw std::invalid_argument("transmission_coefficient: gamma_r must be > 0");
    const double half = gamma_r_mhz / 2.0 + gamma_phi_mhz;
    const cplx numerator = 1.0 - cplx(0.0, detuning_mhz / half);
    const double denominator = 1.0 + (detuning_mhz / half) * (detuning_mhz / half) +
                               omega_rabi_mhz * omega_rabi_mhz / (gamma_r_mhz * half);
    return 1.0 - (gamma_r_mhz / (gamma_r_mhz + 2.0 * gamma_phi_mhz)) * numerator / denominator;
}

double purcell_rate(double g_mhz, double kappa_mhz, double detuning_3r_mhz) {
    if (kappa_mhz <= 0.0) throw std::invalid_argument("purcell_rate: kappa must be > 0");
    const double a = detuning_3r_mhz * detuning_3r_mhz + 4.0 * g_mhz * g_mhz -
                     kappa_mhz * kappa_mhz / 4.0;
    const double root = std::sqrt(a * a + kappa_mhz * kappa_mhz * detuning_3r_mhz * detuning_3r_mhz);
    return kappa_mhz / 2.0 - std::sqrt(0.5) * std::sqrt(std::max(0.0, -a + root));
}

void FluxTuneParams::validate() const {
    if (anharmonicity_mhz >= 0.0)
        throw std::invalid_argument("FluxTuneParams: transmon anharmonicity must be negative");
    if (phi0 <= 0.0) throw std::invalid_argument("FluxTuneParams: phi0 must be positive");
}

double flux_tune_ghz(const FluxTuneParams& ft, double phi) {
    ft.validate();
    const double alpha_ghz = ft.anharmonicity_mhz * 1e-3;
    const double c = std::cos(3.14159265358979323846 * phi / ft.phi0);
    return (ft.omega_max_ghz - alpha_ghz) * std::sqrt(std::abs(c)) + alpha_ghz;
}

double flux_tune_slope_ghz_per_unit(const FluxTuneParams& ft, double phi) {
    ft.validate();
    const double alpha_ghz = ft.anharmonicity_mhz * 1e-3;
    const double pi = 3.14159265358979323846;
    const double x = pi * phi / ft.phi0;
    const double c = std::cos(x);
    if (c == 0.0) throw std::domain_error("flux_tune_slope: singular at the cosine zero");
    const double sign = c > 0.0 ? 1.0 : -1.0;
    // d/dphi sqrt(|cos|) = -sign(cos) sin(x) / (2 sqrt(|cos|)) * pi/phi0
    return -(ft.omega_max_ghz - alpha_ghz) * sign * std::sin(x) /
           (2.0 * std::sqrt(std::abs(c))) * pi / ft.phi0;
}

namespace {

// 3x3 optical-Bloch generator for (sigma-, sigma+, sigma_z), angular units.
Eigen::Matrix3cd bloch_generator(double omega_rabi_ang, double gamma_ang, double gphi_ang) {
    Eigen::Matrix3cd a = Eigen::Matrix3cd::Zero();
    const cplx i(0.0, 1.0);
    a(0, 0) = -(gamma_ang / 2.0 + gphi_ang);
    a(0, 2) = i * omega_rabi_ang / 2.0;
    a(1, 1) = -(gamma_ang / 2.0 + gphi_ang);
    a(1, 2) = -i * omega_rabi_ang / 2.0;
    a(2, 0) = i * omega_rabi_ang;
    a(2, 1) = -i * omega_rabi_ang;
    a(2, 2) = -gamma_ang;
    return a;
}

}  // namespace

double mollow_spectrum(double nu_ghz, double center_ghz, double omega_rabi_mhz,
                       double gamma_mhz, double gamma_phi_mhz, double amplitude) {
    const double om = two_pi * omega_rabi_mhz;
    const double g = two_pi * gamma_mhz;
    const double gp = two_pi * gamma_phi_mhz;
    const Eigen::Matrix3cd a = bloch_generator(om, g, gp);

    // steady state: m_ss = -A^{-1} b, b = (0,0,-gamma)
    Eigen::Vector3cd b(0.0, 0.0, -g);
    const Eigen::Vector3cd mss = a.fullPivLu().solve(-b);
    const cplx sm = mss[0], sp = mss[1], sz = mss[2];

    // regression start X(0) = sigma^- rho_ss: expectations (0, rho_ee, -<sigma^->),
    // trace <sigma^->; subtract the coherent part m_ss * Tr X(0)
    Eigen::Vector3cd v0(0.0, (1.0 + sz) / 2.0, -sm);
    v0 -= mss * sm;

    const double w = two_pi * (nu_ghz - center_ghz) * 1e3;  // MHz offset, angular
    const Eigen::Matrix3cd m = cplx(0.0, w) * Eigen::Matrix3cd::Identity() - a;
    const Eigen::Vector3cd sol = m.fullPivLu().solve(v0);
    return amplitude * 2.0 * sol[1].real();
}

namespace {

struct Moments {
    double total, centroid_ghz, rms_width_ghz, peak, peak_freq_ghz;
};

Moments spectral_moments(const SpectrumResult& s) {
    Moments m{0, 0, 0, 0, s.freq_ghz.front()};
    for (std::size_t i = 0; i < s.psd.size(); ++i) {
        const double v = std::max(s.psd[i], 0.0);
        m.total += v;
        m.centroid_ghz += v * s.freq_ghz[i];
        if (s.psd[i] > m.peak) {
            m.peak = s.psd[i];
            m.peak_freq_ghz = s.freq_ghz[i];
        }
    }
    if (m.total > 0) m.centroid_ghz /= m.total;
    for (std::size_t i = 0; i < s.psd.size(); ++i) {
        const double v = std::max(s.psd[i], 0.0);
        const double d = s.freq_ghz[i] - m.centroid_ghz;
        m.rms_width_ghz += v * d * d;
    }
    if (m.total > 0) m.rms_width_ghz = std::sqrt(m.rms_width_ghz / m.total);
    return m;
}

FitResult package(const detail::LmOutcome& lm, const std::vector<std::string>& names) {
    FitResult out;
    out.residual_norm = lm.residual_norm;
    out.converged = lm.converged;
    out.covariance = lm.covariance;
    for (Eigen::Index i = 0; i < lm.params.size(); ++i) {
        FitParameter p;
        p.name = names[std::size_t(i)];
        p.value = lm.params[i];
        p.std_error = std::sqrt(std::max(0.0, lm.covariance(i, i)));
        out.parameters.push_back(std::move(p));
    }
    return out;
}

double lorentz(double nu, double a, double c, double w) {
    const double d = 2.0 * (nu - c) / w;
    return a / (1.0 + d * d);
}

}  // namespace

FitResult mollow_fit(const SpectrumResult& spectrum, MollowMode mode) {
    spectrum.validate();
    const auto mom = spectral_moments(spectrum);
    const Eigen::Map<const Eigen::VectorXd> nu(spectrum.freq_ghz.data(),
                                               Eigen::Index(spectrum.freq_ghz.size()));
    const Eigen::Map<const Eigen::VectorXd> y(spectrum.psd.data(),
                                              Eigen::Index(spectrum.psd.size()));

    if (mode == MollowMode::full_mollow) {
        // p = (amplitude, center_ghz, omega_rabi_mhz, gamma_mhz, gamma_phi_mhz)
        auto resid = [&](const Eigen::VectorXd& p) {
            Eigen::VectorXd r(nu.size());
            for (Eigen::Index i = 0; i < nu.size(); ++i)
                r[i] = mollow_spectrum(nu[i], p[1], std::abs(p[2]), std::abs(p[3]),
                                       std::abs(p[4]), p[0]) -
                       y[i];
            return r;
        };
        Eigen::VectorXd p0(5);
        const double width0 = std::max(mom.rms_width_ghz * 1e3, 1.0);
        p0 << mom.peak, mom.centroid_ghz, width0, width0, 0.1;
        auto lm = detail::levenberg_marquardt(resid, p0);
        lm.params[2] = std::abs(lm.params[2]);
        lm.params[3] = std::abs(lm.params[3]);
        lm.params[4] = std::abs(lm.params[4]);
        return package(lm, {"amplitude", "center_GHz", "omega_rabi_MHz", "gamma_MHz",
                            "gamma_phi_MHz"});
    }

    // three Lorentzians: central line + symmetric sidebands offset by Omega_R
    // p = (center_ghz, omega_rabi_mhz, a_center, w_center_mhz, a_side, w_side_mhz)
    auto resid = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(nu.size());
        for (Eigen::Index i = 0; i < nu.size(); ++i) {
            const double off = std::abs(p[1]) * 1e-3;
            const double model = lorentz(nu[i], p[2], p[0], std::abs(p[3]) * 1e-3) +
                                 lorentz(nu[i], p[4], p[0] - off, std::abs(p[5]) * 1e-3) +
                                 lorentz(nu[i], p[4], p[0] + off, std::abs(p[5]) * 1e-3);
            r[i] = model - y[i];
        }
        return r;
    };
    Eigen::VectorXd p0(6);
    const double width0 = std::max(mom.rms_width_ghz * 1e3, 1.0);
    p0 << mom.peak_freq_ghz, 1.5 * width0, mom.peak, width0, 0.4 * mom.peak, width0;
    auto lm = detail::levenberg_marquardt(resid, p0);
    lm.params[1] = std::abs(lm.params[1]);
    lm.params[3] = std::abs(lm.params[3]);
    lm.params[5] = std::abs(lm.params[5]);
    return package(lm, {"center_GHz", "omega_rabi_MHz", "amp_center", "fwhm_center_MHz",
                        "amp_side", "fwhm_side_MHz"});
}

FitResult lorentzian_peak_fit(const SpectrumResult& spectrum, int n_peaks) {
    if (n_peaks != 1 && n_peaks != 2)
        throw std::invalid_argument("lorentzian_peak_fit: n_peaks must be 1 or 2");
    spectrum.validate();
    const auto mom = spectral_moments(spectrum);
    const Eigen::Map<const Eigen::VectorXd> nu(spectrum.freq_ghz.data(),
                                               Eigen::Index(spectrum.freq_ghz.size()));
    const Eigen::Map<const Eigen::VectorXd> y(spectrum.psd.data(),
                                              Eigen::Index(spectrum.psd.size()));

    auto fit_single = [&]() {
        auto resid = [&](const Eigen::VectorXd& p) {
            Eigen::VectorXd r(nu.size());
            for (Eigen::Index i = 0; i < nu.size(); ++i)
                r[i] = lorentz(nu[i], p[0], p[1], std::abs(p[2]) * 1e-3) - y[i];
            return r;
        };
        Eigen::VectorXd p0(3);
        p0 << mom.peak, mom.peak_freq_ghz, std::max(2.0 * mom.rms_width_ghz * 1e3, 1.0);
        auto lm = detail::levenberg_marquardt(resid, p0);
        lm.params[2] = std::abs(lm.params[2]);
        FitResult out = package(lm, {"amp_1", "center_1_GHz", "fwhm_1_MHz"});
        out.parameters.push_back({"n_peaks", 1.0, 0.0});
        return out;
    };

    if (n_peaks == 1) return fit_single();

    auto resid = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(nu.size());
        for (Eigen::Index i = 0; i < nu.size(); ++i)
            r[i] = lorentz(nu[i], p[0], p[1], std::abs(p[2]) * 1e-3) +
                   lorentz(nu[i], p[3], p[4], std::abs(p[5]) * 1e-3) - y[i];
        return r;
    };
    // init: strongest bin and the strongest bin on the other side of the centroid
    Eigen::VectorXd p0(6);
    const double w0 = std::max(mom.rms_width_ghz * 1e3, 1.0);
    double second_peak = 0.0, second_freq = mom.centroid_ghz;
    for (std::size_t i = 0; i < spectrum.psd.size(); ++i) {
        const bool other_side = (spectrum.freq_ghz[i] - mom.centroid_ghz) *
                                    (mom.peak_freq_ghz - mom.centroid_ghz) <
                                0.0;
        if (other_side && spectrum.psd[i] > second_peak) {
            second_peak = spectrum.psd[i];
            second_freq = spectrum.freq_ghz[i];
        }
    }
    p0 << mom.peak, mom.peak_freq_ghz, w0, std::max(second_peak, 0.1 * mom.peak), second_freq, w0;
    auto lm = detail::levenberg_marquardt(resid, p0);
    lm.params[2] = std::abs(lm.params[2]);
    lm.params[5] = std::abs(lm.params[5]);

    const double split_mhz = std::abs(lm.params[4] - lm.params[1]) * 1e3;
    const double mean_fwhm = 0.5 * (lm.params[2] + lm.params[5]);
    if (split_mhz < 0.5 * mean_fwhm) {
        FitResult out = fit_single();  // degenerate doublet collapses
        return out;
    }
    // order by center
    if (lm.params[1] > lm.params[4]) {
        std::swap(lm.params[0], lm.params[3]);
        std::swap(lm.params[1], lm.params[4]);
        std::swap(lm.params[2], lm.params[5]);
    }
    FitResult out = package(lm, {"amp_1", "center_1_GHz", "fwhm_1_MHz", "amp_2", "center_2_GHz",
                                 "fwhm_2_MHz"});
    out.parameters.push_back({"n_peaks", 2.0, 0.0});
    return out;
}

}  // namespace natsim
