#pragma once

#include "natsim/dynamics.hpp"
#include "natsim/noise.hpp"

#include <cstdint>
#include <string>

namespace natsim {

struct StochasticConfig {
    int n_traj = 200;
    std::uint64_t base_seed = 1;
    double dt_us = 2e-4;          // split-step size; 0 = auto from noise content
    double relax_time_us = 0.0;   // 0 = auto (see relax_horizon_us)
    double avg_time_us = 6.0;     // powers mode averaging window
    double tau_max_us = 1.5;      // spectra mode correlation span
    int tau_stride = 5;           // record every tau_stride-th step
    int n_workers = 0;            // 0 = NATSIM_WORKERS env or hardware
};

/// Relaxation horizon before sampling: 10 x max(1/gamma_b, 1/kappa,
/// 1/gamma_d_eff), gamma_d_eff = gamma_d plus a noise-induced bright-dark
/// transfer estimate, clamped to [3, 12] us.
double relax_horizon_us(const SystemParams& params, const NoiseSpec& spec);

/// Per-tau ensemble accumulator over a contiguous trajectory index range.
/// Sums are midpoint-split pairwise reductions, so merging two accumulators
/// split at the midpoint is bit-identical to one full-range run.
struct TrajectoryEnsemble {
    std::uint64_t base_seed = 0;
    int idx_begin = 0;
    int idx_end = 0;
    int n_failed = 0;
    std::vector<double> tau_us;
    std::vector<cplx> sum_c2, sum_c4;                  // correlation sums
    std::vector<double> sumsq_c2, sumsq_c4;            // |C|^2 sums for std errors
    double sum_p2 = 0.0, sum_p4 = 0.0;
    double sumsq_p2 = 0.0, sumsq_p4 = 0.0;

    int count() const { return idx_end - idx_begin - n_failed; }
    std::vector<double> stderr_c4() const;  // running standard error per tau

    static TrajectoryEnsemble merge(const TrajectoryEnsemble& a, const TrajectoryEnsemble& b);
    void save_checkpoint(const std::string& path) const;
    static TrajectoryEnsemble load_checkpoint(const std::string& path);
};

struct StochasticMetadata {
    double relax_time_us = 0.0;
    double dt_us = 0.0;
    int n_traj = 0;
    int n_failed = 0;
    bool qualitative_spectra = true;  // windowed FFT: peak heights are qualitative
};

struct StochasticSpectra {
    SpectrumResult s2;
    SpectrumResult s4;
    TransportSummary summary;  // from time-averaged moments, not the spectra
    StochasticMetadata meta;
};

/// Ensemble-averaged steady-state emission spectra with noisy omega_2(t)
/// (Eq. S-stoch): per trajectory draw xi(t), relax under one continuous
/// realization, propagate correlations with the same noise, Blackman window,
/// subtract per-trajectory steady means from the bright correlator.
StochasticSpectra run_stochastic_spectra(const SystemParams& params, const NoiseSpec& spec,
                                         const StochasticConfig& cfg);

/// Correlation accumulator over a trajectory index range (checkpoint/resume
/// building block for run_stochastic_spectra).
TrajectoryEnsemble ensemble_correlations(const SystemParams& params, const NoiseSpec& spec,
                                         const StochasticConfig& cfg, int idx_begin,
                                         int idx_end);

/// Spectra/summary assembled from a (possibly merged) accumulator.
StochasticSpectra spectra_from_ensemble(const SystemParams& params, const NoiseSpec& spec,
                                        const StochasticConfig& cfg,
                                        const TrajectoryEnsemble& ens);

struct StochasticPowers {
    TransportSummary summary;
    double p4_stderr = 0.0;
    double effective_coupling_mhz = 0.0;  // K of the applied noise
    StochasticMetadata meta;
};

/// Integrated powers without spectra: time averages of the port moments over
/// the post-relaxation window, ensemble averaged. The bright-port inelastic
/// part subtracts the per-trajectory DC mean (Lorentzian noise) or the full
/// deterministic periodic mean (coherent tone).
StochasticPowers run_stochastic_powers(const SystemParams& params, const NoiseSpec& spec,
                                       const StochasticConfig& cfg);

struct DephasingDemo {
    std::vector<double> t_us;
    std::vector<double> sigma_x;         // ensemble <sigma_x(t)>
    std::vector<double> markov_sigma_x;  // exp(-2pi gamma_target t)
    double rms_deviation = 0.0;          // over the full window [0, 2/gamma]
};

/// Fig.-S6-style single-qubit demo: H = xi(t) sigma_z in the rotating frame,
/// Wiener-phase Lorentzian noise centered at 190 MHz, amplitude chosen so the
/// Markov prediction equals gamma_target.
DephasingDemo single_qubit_dephasing_demo(double gamma_target_mhz, double fwhm_mhz,
                                          int n_traj, std::uint64_t seed);

/// Deterministic single-run sweep over modulation frequency nu_c with
/// xi(t) = amplitude cos(2 pi nu_c t) on Q2 (App. S-coherent limiting case).
std::vector<TransportSummary> coherent_modulation_scan(const SystemParams& params,
                                                       double amplitude_mhz,
                                                       const std::vector<double>& nu_c_grid_mhz,
                                                       const StochasticConfig& cfg);

}  // namespace natsim
