#include "natsim/dynamics.hpp"

#include "detail/fft.hpp"
#include "detail/ode.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace natsim {

void SpectrumResult::validate() const {
    if (freq_ghz.size() != psd.size() || freq_ghz.size() < 2)
        throw std::invalid_argument("SpectrumResult: grid/psd size mismatch");
    const double d0 = freq_ghz[1] - freq_ghz[0];
    for (std::size_t i = 1; i < freq_ghz.size(); ++i) {
        const double d = freq_ghz[i] - freq_ghz[i - 1];
        if (d <= 0.0 || std::abs(d - d0) > 1e-9 * std::abs(d0))
            throw std::invalid_argument("SpectrumResult: grid not uniform increasing");
    }
}

namespace {

Vec trace_functional(int n) {
    Vec t = Vec::Zero(n * n);
    for (int k = 0; k < n; ++k) t[k * n + k] = 1.0;
    return t;
}

Mat hermitize_normalize(Mat rho) {
    rho = 0.5 * (rho + rho.adjoint()).eval();
    const cplx tr = rho.trace();
    if (std::abs(tr) < 1e-300) throw std::runtime_error("steady_state: zero-trace kernel vector");
    return rho / tr;
}

int kernel_dimension(const Mat& L) {
    Eigen::JacobiSVD<Mat> svd(L);
    const auto& sv = svd.singularValues();
    const double tol = 1e-9 * sv[0];
    int k = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv[i] < tol) ++k;
    return k;
}

Mat steady_via_eigen(const Superoperator& L) {
    Eigen::ComplexEigenSolver<Mat> es(L.matrix);
    Eigen::Index best = 0;
    double best_abs = std::abs(es.eigenvalues()[0]);
    for (Eigen::Index i = 1; i < es.eigenvalues().size(); ++i) {
        const double a = std::abs(es.eigenvalues()[i]);
        if (a < best_abs) { best_abs = a; best = i; }
    }
    return hermitize_normalize(
        Superoperator::unvectorize(es.eigenvectors().col(best), L.hilbert_dim));
}

}  // namespace

Mat steady_state(const Superoperator& L) {
    const int n = L.hilbert_dim;
    const int N = n * n;
    const Vec tr = trace_functional(n);

    auto solve_with_row = [&](int row) {
        Mat M = L.matrix;
        M.row(row) = tr.transpose();
        Vec b = Vec::Zero(N);
        b[row] = 1.0;
        Vec x = M.partialPivLu().solve(b);
        return hermitize_normalize(Superoperator::unvectorize(x, n));
    };

    const Mat rho1 = solve_with_row(0);
    const Mat rho2 = solve_with_row(N - 1);
    const double scale = L.matrix.cwiseAbs().maxCoeff();
    const double res1 = (L.apply(rho1)).norm() / scale;

    if ((rho1 - rho2).norm() > 1e-6 || res1 > 1e-10) {
        // not obviously unique/converged: count the kernel and fall back
        const int k = kernel_dimension(L.matrix);
        if (k != 1) throw DegenerateSteadyState(k);
        const Mat rho = steady_via_eigen(L);
        if (L.apply(rho).norm() / scale > 1e-8)
            throw std::runtime_error("steady_state: residual too large after eigen fallback");
        return rho;
    }
    return rho1;
}

bool validate_density_matrix(const Mat& rho, double trace_tol, double eig_floor) {
    if (std::abs(rho.trace().real() - 1.0) > trace_tol || std::abs(rho.trace().imag()) > trace_tol)
        return false;
    if ((rho - rho.adjoint()).norm() > 1e-9 * std::max(1.0, rho.norm())) return false;
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (rho + rho.adjoint()));
    return es.eigenvalues().minCoeff() >= eig_floor;
}

std::vector<Mat> evolve(const Mat& rho0, const Superoperator& L,
                        const std::vector<double>& t_grid_us) {
    if (t_grid_us.empty() || t_grid_us.front() < 0.0)
        throw std::invalid_argument("evolve: grid must start at t >= 0");
    for (std::size_t i = 1; i < t_grid_us.size(); ++i)
        if (t_grid_us[i] <= t_grid_us[i - 1])
            throw std::invalid_argument("evolve: grid must be increasing");

    detail::Rk45 stepper;
    auto rhs = [&L](const Vec& x, Vec& dx) { dx.noalias() = L.matrix * x; };

    Vec x = Superoperator::vectorize(rho0);
    std::vector<Mat> out;
    out.reserve(t_grid_us.size());
    double t = 0.0;
    for (double tk : t_grid_us) {
        stepper.integrate(rhs, x, t, tk);
        t = tk;
        out.push_back(Superoperator::unvectorize(x, L.hilbert_dim));
    }
    return out;
}

std::vector<cplx> two_time_correlation(const Superoperator& L, const Mat& rho_ss,
                                       const Mat& a_op, const Mat& b_op,
                                       const std::vector<double>& tau_grid_us) {
    if (tau_grid_us.empty() || tau_grid_us.front() != 0.0)
        throw std::invalid_argument("two_time_correlation: tau grid must start at 0");
    detail::Rk45 stepper;
    auto rhs = [&L](const Vec& x, Vec& dx) { dx.noalias() = L.matrix * x; };

    Vec x = Superoperator::vectorize(b_op * rho_ss);
    const Vec w = Superoperator::vectorize(a_op.transpose());  // Tr[A X] = w . vec(X)
    std::vector<cplx> corr;
    corr.reserve(tau_grid_us.size());
    double t = 0.0;
    for (double tk : tau_grid_us) {
        stepper.integrate(rhs, x, t, tk);
        t = tk;
        corr.push_back((w.transpose() * x).value());
    }
    return corr;
}

SpectrumResult emission_spectrum(const std::vector<cplx>& corr,
                                 const std::vector<double>& tau_grid_us, double rate_mhz,
                                 Port port, bool subtract_coherent, cplx mean_product,
                                 double carrier_ghz, SpectralWindow window) {
    const std::size_t n = corr.size();
    if (n < 2 || tau_grid_us.size() != n)
        throw std::invalid_argument("emission_spectrum: corr/grid size mismatch");
    const double dtau = tau_grid_us[1] - tau_grid_us[0];
    for (std::size_t i = 1; i < n; ++i)
        if (std::abs(tau_grid_us[i] - tau_grid_us[i - 1] - dtau) > 1e-9 * dtau)
            throw std::invalid_argument("emission_spectrum: tau grid not uniform");

    std::vector<cplx> c(corr);
    if (subtract_coherent)
        for (auto& v : c) v -= mean_product;
    if (window == SpectralWindow::blackman) {
        // half window peaked at tau = 0 so total power (= C(0) * rate) is kept
        for (std::size_t i = 0; i < n; ++i) {
            const double u = double(i) / double(n - 1);  // 0..1 maps to window half
            const double w = 0.42 + 0.5 * std::cos(3.14159265358979323846 * u) +
                             0.08 * std::cos(2.0 * 3.14159265358979323846 * u);
            c[i] *= w;
        }
    }

    const std::size_t npad = std::max<std::size_t>(detail::next_pow2(4 * n), 4096);
    std::vector<cplx> buf(npad, cplx(0, 0));
    std::copy(c.begin(), c.end(), buf.begin());
    detail::fft_pow2(buf, false);

    const double rate_ang = two_pi * rate_mhz;  // rad/us
    SpectrumResult out;
    out.port = port;
    out.rayleigh_removed = subtract_coherent;
    out.freq_ghz.resize(npad);
    out.psd.resize(npad);
    // S(nu_k) = rate_ang * dtau * (2 Re FFT_k - C(0)), bins reordered ascending
    for (std::size_t k = 0; k < npad; ++k) {
        const std::size_t src = (k + npad / 2) % npad;  // fftshift
        double nu = double(src) / double(npad) / dtau;  // MHz
        if (src >= npad / 2) nu -= 1.0 / dtau;
        out.freq_ghz[k] = carrier_ghz + nu * 1e-3;
        out.psd[k] = rate_ang * dtau * (2.0 * buf[src].real() - c[0].real());
    }
    return out;
}

double integrated_power(const SpectrumResult& spec, std::optional<FreqWindowGhz> exclude) {
    spec.validate();
    if (exclude) {
        if (exclude->lo_ghz >= exclude->hi_ghz)
            throw std::invalid_argument("integrated_power: empty exclusion window");
        if (exclude->hi_ghz < spec.freq_ghz.front() || exclude->lo_ghz > spec.freq_ghz.back())
            throw std::invalid_argument("integrated_power: exclusion window outside grid");
    }
    double acc = 0.0;
    for (std::size_t i = 1; i < spec.freq_ghz.size(); ++i) {
        const double f0 = spec.freq_ghz[i - 1], f1 = spec.freq_ghz[i];
        if (exclude && f0 >= exclude->lo_ghz && f1 <= exclude->hi_ghz) continue;
        acc += 0.5 * (spec.psd[i - 1] + spec.psd[i]) * (f1 - f0);
    }
    return acc * 1e3;  // GHz * photons s^-1 Hz^-1 -> photons/us
}

double transfer_efficiency(double p4, double p2) {
    if (p4 < 0.0 || p2 < 0.0)
        throw std::invalid_argument("transfer_efficiency: negative power");
    const double denom = p4 + 2.0 * p2;
    if (denom <= 0.0)
        throw std::invalid_argument("transfer_efficiency: both powers vanish");
    return p4 / denom;
}

PortMoments port_moments(const Mat& rho, const HilbertSpace& space) {
    const auto bd = bright_dark_operators(space);
    const Mat a = space.annihilation();
    PortMoments m;
    m.bright_population = (bd.sigma_b_plus * bd.sigma_b_minus * rho).trace().real();
    m.bright_amplitude = (bd.sigma_b_minus * rho).trace();
    m.photon_number = (a.adjoint() * a * rho).trace().real();
    m.field_amplitude = (a * rho).trace();
    return m;
}

LindbladRun lindblad_run(const SystemParams& params, const HilbertSpace& space,
                         const SpectraConfig& cfg) {
    const Mat H = build_hamiltonian(params, space);
    const Superoperator L = build_liouvillian(params, H, space);

    LindbladRun run;
    run.rho_ss = steady_state(L);

    // slowest spectral feature ~ (gamma_d + gamma_phi) wide; resolve its decay
    const double slow_mhz = std::max(params.gamma_d_mhz + params.gamma_phi_mhz, 0.05);
    const double tau_max = std::clamp(2.2 / slow_mhz, cfg.tau_max_us, 8.0);
    const std::size_t nsteps = std::size_t(std::ceil(tau_max / cfg.dtau_us));
    std::vector<double> tau(nsteps);
    for (std::size_t i = 0; i < nsteps; ++i) tau[i] = double(i) * cfg.dtau_us;

    const auto bd = bright_dark_operators(space);
    const Mat a = space.annihilation();
    const auto mom = port_moments(run.rho_ss, space);

    const auto c2 = two_time_correlation(L, run.rho_ss, bd.sigma_b_plus, bd.sigma_b_minus, tau);
    const auto c4 = two_time_correlation(L, run.rho_ss, Mat(a.adjoint()), a, tau);

    const cplx mean2 = std::conj(mom.bright_amplitude) * mom.bright_amplitude;
    const cplx mean4 = std::conj(mom.field_amplitude) * mom.field_amplitude;
    run.s2 = emission_spectrum(c2, tau, params.gamma_b_mhz / 2.0, Port::waveguide_2,
                               cfg.subtract_coherent, mean2, params.omega_in_ghz);
    run.s4 = emission_spectrum(c4, tau, params.kappa_mhz, Port::resonator_4,
                               cfg.subtract_coherent, mean4, params.omega_in_ghz);

    run.summary.p2_photons_per_us = integrated_power(run.s2);
    std::optional<FreqWindowGhz> excl;
    if (cfg.rayleigh_exclusion_mhz > 0.0)
        excl = FreqWindowGhz{params.omega_in_ghz - cfg.rayleigh_exclusion_mhz * 1e-3,
                             params.omega_in_ghz + cfg.rayleigh_exclusion_mhz * 1e-3};
    run.summary.p4_photons_per_us = integrated_power(run.s4, excl);
    const double denom = run.summary.p4_photons_per_us + 2.0 * run.summary.p2_photons_per_us;
    run.summary.eta = denom > 0.0 ? run.summary.p4_photons_per_us / denom : 0.0;
    return run;
}

}  // namespace natsim
