#include "natsim/stochastic.hpp"

#include "detail/parallel.hpp"
#include "detail/rng.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

namespace natsim {

namespace {

// ---------------------------------------------------------------------------
// split-step propagator: exact expm(L0 dt) alternating with the diagonal
// sigma_2^z phase, second-order in the noise cross terms

struct SplitPropagator {
    Mat expm_l0_dt;               // dim^2 x dim^2
    std::vector<int> category;    // (z_row - z_col)/2 per vectorized entry
    double dt_us;

    SplitPropagator(const Superoperator& l0, const HilbertSpace& space, double dt)
        : dt_us(dt) {
        expm_l0_dt = (l0.matrix * dt).exp();
        const Mat sz2 = space.sigma_z(2);
        const int n = l0.hilbert_dim;
        category.resize(std::size_t(n) * std::size_t(n));
        for (int col = 0; col < n; ++col)
            for (int row = 0; row < n; ++row)
                category[std::size_t(col) * n + row] =
                    int(std::lround((sz2(row, row).real() - sz2(col, col).real()) / 2.0));
    }

    // multiply entries of column x by exp(-i 2pi (z_r - z_c) * xi_integral)
    void apply_phase(Eigen::Ref<Vec> x, double xi_integral_mhz_us) const {
        const double ang = -two_pi * 2.0 * xi_integral_mhz_us;
        const cplx p(std::cos(ang), std::sin(ang));
        const cplx table[3] = {std::conj(p), cplx(1.0, 0.0), p};
        for (Eigen::Index i = 0; i < x.size(); ++i) x[i] *= table[category[std::size_t(i)] + 1];
    }

    // one Strang step for a block of columns; integrals are per trajectory and
    // cols_per_traj columns share each trajectory's phase
    void step(Mat& block, Mat& scratch, const std::vector<double>& first_half,
              const std::vector<double>& second_half, int cols_per_traj) const {
        const int ntraj = int(block.cols()) / cols_per_traj;
        for (int j = 0; j < ntraj; ++j)
            for (int c = 0; c < cols_per_traj; ++c)
                apply_phase(block.col(j * cols_per_traj + c), first_half[std::size_t(j)]);
        scratch.noalias() = expm_l0_dt * block;
        block.swap(scratch);
        for (int j = 0; j < ntraj; ++j)
            for (int c = 0; c < cols_per_traj; ++c)
                apply_phase(block.col(j * cols_per_traj + c), second_half[std::size_t(j)]);
    }
};

// ---------------------------------------------------------------------------
// noise paths: integral of xi(t) over consecutive half-steps

class NoisePath {
public:
    virtual ~NoisePath() = default;
    virtual double half_step_integral() = 0;  // MHz * us over the next half-step
};

class WienerPath : public NoisePath {
public:
    WienerPath(double xi0, double nu_l, double fwhm, double dt_us, std::uint64_t seed)
        : xi0_(xi0), nu_l_(nu_l), half_dt_(dt_us / 2.0),
          sigma_(std::sqrt(two_pi * fwhm * dt_us / 2.0)), rng_(seed) {
        phi_ = rng_.uniform() * two_pi;
        value_ = current_value();
    }

    double half_step_integral() override {
        const double left = value_;
        t_ += half_dt_;
        if (sigma_ > 0.0) phi_ += sigma_ * rng_();
        value_ = current_value();
        return 0.5 * (left + value_) * half_dt_;
    }

private:
    double current_value() const { return xi0_ * std::cos(two_pi * nu_l_ * t_ + phi_); }

    double xi0_, nu_l_, half_dt_, sigma_;
    detail::GaussianRng rng_;
    double t_ = 0.0, phi_ = 0.0, value_ = 0.0;
};

class TonePath : public NoisePath {
public:
    TonePath(double amp, double nu_c, double dt_us)
        : amp_(amp), omega_(two_pi * nu_c), half_dt_(dt_us / 2.0) {}

    double half_step_integral() override {
        const double t1 = t_ + half_dt_;
        double integral;
        if (omega_ == 0.0)
            integral = amp_ * half_dt_;
        else
            integral = amp_ * (std::sin(omega_ * t1) - std::sin(omega_ * t_)) / omega_;
        t_ = t1;
        return integral;
    }

private:
    double amp_, omega_, half_dt_;
    double t_ = 0.0;
};

std::unique_ptr<NoisePath> make_path(const NoiseSpec& spec, double dt_us, std::uint64_t seed) {
    switch (spec.kind) {
        case NoiseKind::lorentzian:
            return std::make_unique<WienerPath>(spec.wiener_xi0_mhz(), spec.center_mhz,
                                                spec.fwhm_mhz, dt_us, seed);
        case NoiseKind::coherent_tone:
            return std::make_unique<TonePath>(spec.tone_amp_mhz, spec.tone_freq_mhz, dt_us);
        case NoiseKind::white:
            throw std::invalid_argument(
                "stochastic engine: white noise is handled exactly by the Lindblad engine "
                "(gamma_phi = 2 A_W)");
    }
    throw std::invalid_argument("stochastic engine: unknown noise kind");
}

double auto_dt_us(const NoiseSpec& spec, double requested) {
    if (requested > 0.0) return requested;
    double content = 50.0;
    if (spec.kind == NoiseKind::lorentzian) content = spec.center_mhz + 3.0 * spec.fwhm_mhz;
    if (spec.kind == NoiseKind::coherent_tone) content = spec.tone_freq_mhz;
    return std::min(2e-4, 1.0 / (16.0 * std::max(content, 50.0)));
}

struct Weights {
    Vec tr_n_a;      // Tr[a^dag a X]
    Vec tr_a;        // Tr[a X]
    Vec tr_nb;       // Tr[sigma_b^+ sigma_b^- X]
    Vec tr_sbm;      // Tr[sigma_b^- X]
    Vec tr_sbp;      // Tr[sigma_b^+ X]
    Vec tr_adag;     // Tr[a^dag X]
    Mat sbm, a_op;   // operators for forming X(0)
};

Weights make_weights(const HilbertSpace& space) {
    const auto bd = bright_dark_operators(space);
    const Mat a = space.annihilation();
    auto w = [](const Mat& op) { return Superoperator::vectorize(op.transpose()); };
    Weights out;
    out.tr_n_a = w(a.adjoint() * a);
    out.tr_a = w(a);
    out.tr_nb = w(bd.sigma_b_plus * bd.sigma_b_minus);
    out.tr_sbm = w(bd.sigma_b_minus);
    out.tr_sbp = w(bd.sigma_b_plus);
    out.tr_adag = w(a.adjoint());
    out.sbm = bd.sigma_b_minus;
    out.a_op = a;
    return out;
}

cplx expect(const Vec& weight, const Eigen::Ref<const Vec>& x) {
    return (weight.transpose() * x).value();
}

// per-trajectory result in spectra mode
struct TrajCorr {
    std::vector<cplx> c2, c4;
    double p2 = 0.0, p4 = 0.0;
    bool ok = true;
};

// per-trajectory result in powers mode
struct TrajPower {
    double p2 = 0.0, p4 = 0.0;
    bool ok = true;
};

struct EngineContext {
    const SystemParams& params;
    const HilbertSpace space;
    const Superoperator l0;
    const Vec rho0;  // vectorized no-noise steady state
    const Weights w;
};

EngineContext make_context(const SystemParams& params) {
    HilbertSpace space;
    SystemParams p0 = params;  // the noisy channel replaces Lindblad dephasing
    p0.gamma_phi_mhz = 0.0;
    const Mat h = build_hamiltonian(p0, space);
    Superoperator l0 = build_liouvillian(p0, h, space);
    const Mat rho_ss = steady_state(l0);
    Weights w = make_weights(space);
    return EngineContext{params, space, std::move(l0), Superoperator::vectorize(rho_ss),
                         std::move(w)};
}

bool column_sane(const Eigen::Ref<const Vec>& rho_vec, int n) {
    cplx tr = 0.0;
    for (int k = 0; k < n; ++k) tr += rho_vec[Eigen::Index(k) * n + k];
    return std::isfinite(tr.real()) && std::abs(tr - 1.0) < 1e-6;
}

// relax + averaging run of a single trajectory; spectra mode also propagates
// the two correlation columns with the continued noise
TrajCorr run_trajectory_spectra(const EngineContext& ctx, const SplitPropagator& prop,
                                const NoiseSpec& spec, const StochasticConfig& cfg,
                                double relax_us, std::uint64_t seed,
                                const std::vector<double>& tau_grid) {
    const double dt = prop.dt_us;
    const int n = ctx.l0.hilbert_dim;
    auto path = make_path(spec, dt, seed);

    const std::size_t n_relax = std::size_t(std::llround(relax_us / dt));
    const std::size_t mean_window = std::max<std::size_t>(n_relax / 4, 1);

    Mat block(n * n, 1), scratch(n * n, 1);
    block.col(0) = ctx.rho0;
    std::vector<double> h1(1), h2(1);
    cplx mean_sbm = 0.0;
    for (std::size_t i = 0; i < n_relax; ++i) {
        h1[0] = path->half_step_integral();
        h2[0] = path->half_step_integral();
        prop.step(block, scratch, h1, h2, 1);
        if (i + mean_window >= n_relax) mean_sbm += expect(ctx.w.tr_sbm, block.col(0));
    }
    mean_sbm /= double(mean_window);

    TrajCorr out;
    out.ok = column_sane(block.col(0), n);
    if (!out.ok) return out;

    // X_b = sigma_b^- rho(t0), X_a = a rho(t0); propagate (rho, X_b, X_a)
    const Mat rho_t0 = Superoperator::unvectorize(block.col(0), n);
    Mat corr_block(n * n, 3), corr_scratch(n * n, 3);
    corr_block.col(0) = block.col(0);
    corr_block.col(1) = Superoperator::vectorize(ctx.w.sbm * rho_t0);
    corr_block.col(2) = Superoperator::vectorize(ctx.w.a_op * rho_t0);

    out.c2.reserve(tau_grid.size());
    out.c4.reserve(tau_grid.size());
    out.c2.push_back(expect(ctx.w.tr_sbp, corr_block.col(1)) - std::conj(mean_sbm) * mean_sbm);
    out.c4.push_back(expect(ctx.w.tr_adag, corr_block.col(2)));

    const std::size_t n_corr = std::size_t(std::llround(tau_grid.back() / dt));
    double acc_nb = 0.0, acc_na = 0.0;
    cplx acc_a = 0.0, acc_sbm = 0.0;
    for (std::size_t i = 1; i <= n_corr; ++i) {
        h1[0] = path->half_step_integral();
        h2[0] = path->half_step_integral();
        prop.step(corr_block, corr_scratch, h1, h2, 3);
        acc_nb += expect(ctx.w.tr_nb, corr_block.col(0)).real();
        acc_na += expect(ctx.w.tr_n_a, corr_block.col(0)).real();
        acc_a += expect(ctx.w.tr_a, corr_block.col(0));
        acc_sbm += expect(ctx.w.tr_sbm, corr_block.col(0));
        if (i % std::size_t(cfg.tau_stride) == 0 && out.c2.size() < tau_grid.size()) {
            out.c2.push_back(expect(ctx.w.tr_sbp, corr_block.col(1)) -
                             std::conj(mean_sbm) * mean_sbm);
            out.c4.push_back(expect(ctx.w.tr_adag, corr_block.col(2)));
        }
    }
    out.ok = column_sane(corr_block.col(0), n) && out.c2.size() == tau_grid.size();

    const double inv = 1.0 / double(n_corr);
    const cplx a_dc = acc_a * inv, sbm_dc = acc_sbm * inv;
    out.p4 = two_pi * ctx.params.kappa_mhz * (acc_na * inv - std::norm(a_dc));
    out.p2 = two_pi * (ctx.params.gamma_b_mhz / 2.0) * (acc_nb * inv - std::norm(sbm_dc));
    return out;
}

TrajPower run_trajectory_powers(const EngineContext& ctx, const SplitPropagator& prop,
                                const NoiseSpec& spec, const StochasticConfig& cfg,
                                double relax_us, std::uint64_t seed) {
    const double dt = prop.dt_us;
    const int n = ctx.l0.hilbert_dim;
    auto path = make_path(spec, dt, seed);
    const bool periodic_mean = spec.kind == NoiseKind::coherent_tone;

    const std::size_t n_relax = std::size_t(std::llround(relax_us / dt));
    const std::size_t n_avg = std::size_t(std::llround(cfg.avg_time_us / dt));

    Mat block(n * n, 1), scratch(n * n, 1);
    block.col(0) = ctx.rho0;
    std::vector<double> h1(1), h2(1);
    for (std::size_t i = 0; i < n_relax; ++i) {
        h1[0] = path->half_step_integral();
        h2[0] = path->half_step_integral();
        prop.step(block, scratch, h1, h2, 1);
    }

    double acc_nb = 0.0, acc_na = 0.0, acc_sb_coh = 0.0;
    cplx acc_a = 0.0, acc_sbm = 0.0;
    for (std::size_t i = 0; i < n_avg; ++i) {
        h1[0] = path->half_step_integral();
        h2[0] = path->half_step_integral();
        prop.step(block, scratch, h1, h2, 1);
        acc_nb += expect(ctx.w.tr_nb, block.col(0)).real();
        acc_na += expect(ctx.w.tr_n_a, block.col(0)).real();
        acc_a += expect(ctx.w.tr_a, block.col(0));
        const cplx sbm = expect(ctx.w.tr_sbm, block.col(0));
        acc_sbm += sbm;
        acc_sb_coh += std::norm(sbm);  // time-resolved |<sigma_b>|^2
    }
    TrajPower out;
    out.ok = column_sane(block.col(0), n);
    const double inv = 1.0 / double(n_avg);
    const double coherent_b = periodic_mean ? acc_sb_coh * inv : std::norm(acc_sbm * inv);
    out.p2 = two_pi * (ctx.params.gamma_b_mhz / 2.0) * (acc_nb * inv - coherent_b);
    out.p4 = two_pi * ctx.params.kappa_mhz * (acc_na * inv - std::norm(acc_a * inv));
    return out;
}

// deterministic midpoint-split pairwise reduction over per-trajectory data
template <typename T, typename Add>
T pairwise_reduce(const std::vector<T>& items, std::size_t b, std::size_t e, const Add& add) {
    if (e - b == 1) return items[b];
    const std::size_t mid = b + (e - b) / 2;
    return add(pairwise_reduce(items, b, mid, add), pairwise_reduce(items, mid, e, add));
}

}  // namespace

double relax_horizon_us(const SystemParams& params, const NoiseSpec& spec) {
    double induced_mhz = 1.0;
    if (spec.kind == NoiseKind::lorentzian) induced_mhz = 0.5 * spec.a_l_mhz;
    if (spec.kind == NoiseKind::coherent_tone) induced_mhz = 0.1 * spec.tone_amp_mhz;
    const double gd_eff = params.gamma_d_mhz + induced_mhz;
    const double horizon = 10.0 * std::max({1.0 / std::max(params.gamma_b_mhz, 1e-3),
                                            1.0 / std::max(params.kappa_mhz, 1e-3),
                                            1.0 / gd_eff});
    return std::clamp(horizon, 4.0, 12.0);
}

std::vector<double> TrajectoryEnsemble::stderr_c4() const {
    std::vector<double> out(tau_us.size(), 0.0);
    const double n = double(count());
    if (n < 2) return out;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double mean_sq = sumsq_c4[i] / n;
        const double sq_mean = std::norm(sum_c4[i] / n);
        out[i] = std::sqrt(std::max(0.0, mean_sq - sq_mean) / (n - 1.0));
    }
    return out;
}

TrajectoryEnsemble TrajectoryEnsemble::merge(const TrajectoryEnsemble& a,
                                             const TrajectoryEnsemble& b) {
    if (a.base_seed != b.base_seed || a.idx_end != b.idx_begin)
        throw std::invalid_argument("TrajectoryEnsemble::merge: ranges not contiguous");
    if (a.tau_us != b.tau_us)
        throw std::invalid_argument("TrajectoryEnsemble::merge: tau grids differ");
    TrajectoryEnsemble out = a;
    out.idx_end = b.idx_end;
    out.n_failed += b.n_failed;
    for (std::size_t i = 0; i < out.sum_c2.size(); ++i) {
        out.sum_c2[i] += b.sum_c2[i];
        out.sum_c4[i] += b.sum_c4[i];
        out.sumsq_c2[i] += b.sumsq_c2[i];
        out.sumsq_c4[i] += b.sumsq_c4[i];
    }
    out.sum_p2 += b.sum_p2;
    out.sum_p4 += b.sum_p4;
    out.sumsq_p2 += b.sumsq_p2;
    out.sumsq_p4 += b.sumsq_p4;
    return out;
}

TrajectoryEnsemble ensemble_correlations(const SystemParams& params, const NoiseSpec& spec,
                                         const StochasticConfig& cfg, int idx_begin,
                                         int idx_end) {
    const auto ctx = make_context(params);
    const double dt = auto_dt_us(spec, cfg.dt_us);
    const SplitPropagator prop(ctx.l0, ctx.space, dt);
    const double relax =
        cfg.relax_time_us > 0.0 ? cfg.relax_time_us : relax_horizon_us(params, spec);

    const std::size_t n_tau =
        std::size_t(std::floor(cfg.tau_max_us / (dt * cfg.tau_stride))) + 1;
    std::vector<double> tau(n_tau);
    for (std::size_t i = 0; i < n_tau; ++i) tau[i] = double(i) * dt * double(cfg.tau_stride);

    const int n_traj = idx_end - idx_begin;
    std::vector<TrajCorr> results(static_cast<std::size_t>(n_traj));
    detail::parallel_for(n_traj, detail::worker_count(cfg.n_workers), [&](int i) {
        const int idx = idx_begin + i;
        auto r = run_trajectory_spectra(ctx, prop, spec, cfg, relax,
                                        detail::derive_seed(cfg.base_seed, std::uint64_t(idx)),
                                        tau);
        if (!r.ok) {  // retry once with a halved step
            const SplitPropagator fine(ctx.l0, ctx.space, dt / 2.0);
            r = run_trajectory_spectra(ctx, fine, spec, cfg, relax,
                                       detail::derive_seed(cfg.base_seed, std::uint64_t(idx)),
                                       tau);
        }
        results[std::size_t(i)] = std::move(r);
    });

    TrajectoryEnsemble ens;
    ens.base_seed = cfg.base_seed;
    ens.idx_begin = idx_begin;
    ens.idx_end = idx_end;
    ens.tau_us = tau;
    ens.sum_c2.assign(n_tau, cplx(0, 0));
    ens.sum_c4.assign(n_tau, cplx(0, 0));
    ens.sumsq_c2.assign(n_tau, 0.0);
    ens.sumsq_c4.assign(n_tau, 0.0);

    // failed trajectories contribute zeros and are excluded from the count
    for (auto& r : results) {
        if (!r.ok) {
            ens.n_failed += 1;
            r.c2.assign(n_tau, cplx(0, 0));
            r.c4.assign(n_tau, cplx(0, 0));
            r.p2 = r.p4 = 0.0;
        }
    }
    struct Sums {
        std::vector<cplx> c2, c4;
        std::vector<double> q2, q4;
        double p2, p4, pp2, pp4;
    };
    std::vector<Sums> leaves(static_cast<std::size_t>(n_traj));
    for (int i = 0; i < n_traj; ++i) {
        const auto& r = results[std::size_t(i)];
        Sums s;
        s.c2 = r.c2;
        s.c4 = r.c4;
        s.q2.resize(n_tau);
        s.q4.resize(n_tau);
        for (std::size_t k = 0; k < n_tau; ++k) {
            s.q2[k] = std::norm(r.c2[k]);
            s.q4[k] = std::norm(r.c4[k]);
        }
        s.p2 = r.p2;
        s.p4 = r.p4;
        s.pp2 = r.p2 * r.p2;
        s.pp4 = r.p4 * r.p4;
        leaves[std::size_t(i)] = std::move(s);
    }
    const auto total = pairwise_reduce(leaves, 0, leaves.size(), [&](Sums a, const Sums& b) {
        for (std::size_t k = 0; k < n_tau; ++k) {
            a.c2[k] += b.c2[k];
            a.c4[k] += b.c4[k];
            a.q2[k] += b.q2[k];
            a.q4[k] += b.q4[k];
        }
        a.p2 += b.p2;
        a.p4 += b.p4;
        a.pp2 += b.pp2;
        a.pp4 += b.pp4;
        return a;
    });
    ens.sum_c2 = total.c2;
    ens.sum_c4 = total.c4;
    ens.sumsq_c2 = total.q2;
    ens.sumsq_c4 = total.q4;
    ens.sum_p2 = total.p2;
    ens.sum_p4 = total.p4;
    ens.sumsq_p2 = total.pp2;
    ens.sumsq_p4 = total.pp4;
    return ens;
}

StochasticSpectra spectra_from_ensemble(const SystemParams& params, const NoiseSpec& spec,
                                        const StochasticConfig& cfg,
                                        const TrajectoryEnsemble& ens) {
    const int n = ens.count();
    if (n < 1) throw std::runtime_error("spectra_from_ensemble: no completed trajectories");
    std::vector<cplx> c2(ens.sum_c2), c4(ens.sum_c4);
    for (auto& v : c2) v /= double(n);
    for (auto& v : c4) v /= double(n);

    StochasticSpectra out;
    out.s2 = emission_spectrum(c2, ens.tau_us, params.gamma_b_mhz / 2.0, Port::waveguide_2,
                               false, cplx(0, 0), params.omega_in_ghz, SpectralWindow::blackman);
    out.s2.rayleigh_removed = true;  // per-trajectory mean subtraction
    out.s4 = emission_spectrum(c4, ens.tau_us, params.kappa_mhz, Port::resonator_4, false,
                               cplx(0, 0), params.omega_in_ghz, SpectralWindow::blackman);
    out.summary.p2_photons_per_us = ens.sum_p2 / double(n);
    out.summary.p4_photons_per_us = ens.sum_p4 / double(n);
    const double den = out.summary.p4_photons_per_us + 2.0 * out.summary.p2_photons_per_us;
    out.summary.eta = den > 0.0 ? out.summary.p4_photons_per_us / den : 0.0;
    out.meta.relax_time_us =
        cfg.relax_time_us > 0.0 ? cfg.relax_time_us : relax_horizon_us(params, spec);
    out.meta.dt_us = auto_dt_us(spec, cfg.dt_us);
    out.meta.n_traj = ens.idx_end - ens.idx_begin;
    out.meta.n_failed = ens.n_failed;
    return out;
}

StochasticSpectra run_stochastic_spectra(const SystemParams& params, const NoiseSpec& spec,
                                         const StochasticConfig& cfg) {
    if (cfg.n_traj < 1) throw std::invalid_argument("run_stochastic_spectra: n_traj >= 1");
    const auto ens = ensemble_correlations(params, spec, cfg, 0, cfg.n_traj);
    return spectra_from_ensemble(params, spec, cfg, ens);
}

StochasticPowers run_stochastic_powers(const SystemParams& params, const NoiseSpec& spec,
                                       const StochasticConfig& cfg) {
    if (cfg.n_traj < 1) throw std::invalid_argument("run_stochastic_powers: n_traj >= 1");
    const auto ctx = make_context(params);
    const double dt = auto_dt_us(spec, cfg.dt_us);
    const SplitPropagator prop(ctx.l0, ctx.space, dt);
    const double relax =
        cfg.relax_time_us > 0.0 ? cfg.relax_time_us : relax_horizon_us(params, spec);

    std::vector<TrajPower> results(static_cast<std::size_t>(cfg.n_traj));
    detail::parallel_for(cfg.n_traj, detail::worker_count(cfg.n_workers), [&](int i) {
        auto r = run_trajectory_powers(ctx, prop, spec, cfg, relax,
                                       detail::derive_seed(cfg.base_seed, std::uint64_t(i)));
        if (!r.ok) {
            const SplitPropagator fine(ctx.l0, ctx.space, dt / 2.0);
            r = run_trajectory_powers(ctx, fine, spec, cfg, relax,
                                      detail::derive_seed(cfg.base_seed, std::uint64_t(i)));
        }
        results[std::size_t(i)] = r;
    });

    StochasticPowers out;
    int n_ok = 0;
    double s2 = 0, s4 = 0, q4 = 0;
    for (const auto& r : results) {
        if (!r.ok) continue;
        ++n_ok;
        s2 += r.p2;
        s4 += r.p4;
        q4 += r.p4 * r.p4;
    }
    if (n_ok == 0) throw std::runtime_error("run_stochastic_powers: all trajectories failed");
    out.summary.p2_photons_per_us = s2 / n_ok;
    out.summary.p4_photons_per_us = s4 / n_ok;
    const double den = out.summary.p4_photons_per_us + 2.0 * out.summary.p2_photons_per_us;
    out.summary.eta = den > 0.0 ? out.summary.p4_photons_per_us / den : 0.0;
    out.p4_stderr = n_ok > 1 ? std::sqrt(std::max(0.0, q4 / n_ok - std::pow(s4 / n_ok, 2)) /
                                         (n_ok - 1.0))
                             : 0.0;
    if (spec.kind == NoiseKind::lorentzian)
        out.effective_coupling_mhz = std::sqrt(2.0) * spec.wiener_xi0_mhz();
    if (spec.kind == NoiseKind::coherent_tone)
        out.effective_coupling_mhz = std::sqrt(2.0) * spec.tone_amp_mhz;
    out.meta.relax_time_us = relax;
    out.meta.dt_us = dt;
    out.meta.n_traj = cfg.n_traj;
    out.meta.n_failed = cfg.n_traj - n_ok;
    return out;
}

DephasingDemo single_qubit_dephasing_demo(double gamma_target_mhz, double fwhm_mhz,
                                          int n_traj, std::uint64_t seed) {
    if (gamma_target_mhz < 0.0 || fwhm_mhz <= 0.0 || n_traj < 1)
        throw std::invalid_argument("single_qubit_dephasing_demo: bad inputs");
    const double nu_l = 190.0;  // the experiment's Lorentzian center
    const double half = fwhm_mhz / 2.0;
    const double xi0 =
        std::sqrt(gamma_target_mhz * (nu_l * nu_l + half * half) / fwhm_mhz);

    const double fs = std::max(2500.0, 16.0 * (nu_l + 2.0 * fwhm_mhz));
    const double dt = 1.0 / fs;
    const double horizon = gamma_target_mhz > 0.0 ? 2.0 / gamma_target_mhz : 1.0;
    const std::size_t nsamp = std::size_t(horizon / dt);

    DephasingDemo out;
    out.t_us.resize(nsamp);
    out.sigma_x.assign(nsamp, 0.0);
    out.markov_sigma_x.resize(nsamp);
    for (std::size_t i = 0; i < nsamp; ++i) {
        out.t_us[i] = double(i + 1) * dt;
        out.markov_sigma_x[i] = std::exp(-two_pi * gamma_target_mhz * out.t_us[i]);
    }

    std::vector<std::vector<double>> partial(static_cast<std::size_t>(n_traj));
    detail::parallel_for(n_traj, detail::worker_count(0), [&](int j) {
        const auto xi = wiener_phase_process(xi0, nu_l, fwhm_mhz, dt, nsamp + 1,
                                             detail::derive_seed(seed, std::uint64_t(j)));
        std::vector<double> sx(nsamp);
        double theta = 0.0;
        for (std::size_t i = 0; i < nsamp; ++i) {
            theta += 2.0 * two_pi * 0.5 * (xi.samples[i] + xi.samples[i + 1]) * dt;
            sx[i] = std::cos(theta);
        }
        partial[std::size_t(j)] = std::move(sx);
    });
    for (const auto& sx : partial)
        for (std::size_t i = 0; i < nsamp; ++i) out.sigma_x[i] += sx[i];
    for (auto& v : out.sigma_x) v /= double(n_traj);

    double acc = 0.0;
    for (std::size_t i = 0; i < nsamp; ++i)
        acc += std::pow(out.sigma_x[i] - out.markov_sigma_x[i], 2);
    out.rms_deviation = std::sqrt(acc / double(nsamp));
    return out;
}

std::vector<TransportSummary> coherent_modulation_scan(const SystemParams& params,
                                                       double amplitude_mhz,
                                                       const std::vector<double>& nu_c_grid_mhz,
                                                       const StochasticConfig& cfg) {
    if (amplitude_mhz < 0.0)
        throw std::invalid_argument("coherent_modulation_scan: amplitude must be >= 0");
    std::vector<TransportSummary> out(nu_c_grid_mhz.size());
    const auto ctx = make_context(params);
    detail::parallel_for(int(nu_c_grid_mhz.size()), detail::worker_count(cfg.n_workers),
                         [&](int i) {
        const NoiseSpec spec =
            NoiseSpec::coherent_tone(amplitude_mhz, nu_c_grid_mhz[std::size_t(i)]);
        const double dt = auto_dt_us(spec, cfg.dt_us);
        const SplitPropagator prop(ctx.l0, ctx.space, dt);
        const double relax =
            cfg.relax_time_us > 0.0 ? cfg.relax_time_us : relax_horizon_us(params, spec);
        const auto r = run_trajectory_powers(ctx, prop, spec, cfg, relax, 0);
        TransportSummary s;
        s.p2_photons_per_us = r.p2;
        s.p4_photons_per_us = r.p4;
        const double den = r.p4 + 2.0 * r.p2;
        s.eta = den > 0.0 && r.ok ? r.p4 / den : 0.0;
        out[std::size_t(i)] = s;
    });
    return out;
}

// ---------------------------------------------------------------------------
// checkpointing

namespace {
constexpr char kCkptMagic[8] = {'N', 'A', 'T', 'S', 'C', 'K', 'P', '1'};

template <typename T>
void put(std::ofstream& f, const T& v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
void get(std::ifstream& f, T& v) {
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
}
template <typename T>
void put_vec(std::ofstream& f, const std::vector<T>& v) {
    put(f, std::uint64_t(v.size()));
    f.write(reinterpret_cast<const char*>(v.data()), std::streamsize(sizeof(T) * v.size()));
}
template <typename T>
void get_vec(std::ifstream& f, std::vector<T>& v) {
    std::uint64_t n = 0;
    get(f, n);
    v.resize(n);
    f.read(reinterpret_cast<char*>(v.data()), std::streamsize(sizeof(T) * n));
}
}  // namespace

void TrajectoryEnsemble::save_checkpoint(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_checkpoint: cannot open " + path);
    f.write(kCkptMagic, 8);
    put(f, base_seed);
    put(f, std::int32_t(idx_begin));
    put(f, std::int32_t(idx_end));
    put(f, std::int32_t(n_failed));
    put_vec(f, tau_us);
    put_vec(f, sum_c2);
    put_vec(f, sum_c4);
    put_vec(f, sumsq_c2);
    put_vec(f, sumsq_c4);
    put(f, sum_p2);
    put(f, sum_p4);
    put(f, sumsq_p2);
    put(f, sumsq_p4);
}

TrajectoryEnsemble TrajectoryEnsemble::load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_checkpoint: cannot open " + path);
    char magic[8];
    f.read(magic, 8);
    if (std::memcmp(magic, kCkptMagic, 8) != 0)
        throw std::runtime_error("load_checkpoint: bad magic/version in " + path);
    TrajectoryEnsemble e;
    get(f, e.base_seed);
    std::int32_t b = 0, d = 0, nf = 0;
    get(f, b);
    get(f, d);
    get(f, nf);
    e.idx_begin = b;
    e.idx_end = d;
    e.n_failed = nf;
    get_vec(f, e.tau_us);
    get_vec(f, e.sum_c2);
    get_vec(f, e.sum_c4);
    get_vec(f, e.sumsq_c2);
    get_vec(f, e.sumsq_c4);
    get(f, e.sum_p2);
    get(f, e.sum_p4);
    get(f, e.sumsq_p2);
    get(f, e.sumsq_p4);
    if (!f) throw std::runtime_error("load_checkpoint: truncated file " + path);
    return e;
}

}  // namespace natsim
