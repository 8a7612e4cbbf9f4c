#include "natsim/dynamics.hpp"
#include "natsim/noise.hpp"
#include "natsim/rate_model.hpp"
#include "natsim/scenario.hpp"
#include "natsim/spectro.hpp"
#include "natsim/stochastic.hpp"

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace natsim;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Noise-assisted excitation transport simulator (three qubits + resonator)";
    m.attr("__version__") = version_string;

    py::class_<HilbertSpace>(m, "HilbertSpace")
        .def(py::init<int, int>(), py::arg("qubit_count") = 3, py::arg("resonator_dim") = 3)
        .def_readonly("qubit_count", &HilbertSpace::qubit_count)
        .def_readonly("resonator_dim", &HilbertSpace::resonator_dim)
        .def("dim", &HilbertSpace::dim)
        .def("identity", &HilbertSpace::identity)
        .def("embed_qubit_operator", &HilbertSpace::embed_qubit_operator, py::arg("local_op"),
             py::arg("site"))
        .def("sigma_plus", &HilbertSpace::sigma_plus)
        .def("sigma_minus", &HilbertSpace::sigma_minus)
        .def("sigma_x", &HilbertSpace::sigma_x)
        .def("sigma_y", &HilbertSpace::sigma_y)
        .def("sigma_z", &HilbertSpace::sigma_z)
        .def("annihilation", &HilbertSpace::annihilation)
        .def("ground_state", &HilbertSpace::ground_state);

    py::class_<BrightDarkOps>(m, "BrightDarkOps")
        .def_readonly("sigma_b_plus", &BrightDarkOps::sigma_b_plus)
        .def_readonly("sigma_b_minus", &BrightDarkOps::sigma_b_minus)
        .def_readonly("sigma_d_plus", &BrightDarkOps::sigma_d_plus)
        .def_readonly("sigma_d_minus", &BrightDarkOps::sigma_d_minus);
    m.def("bright_dark_operators", &bright_dark_operators);

    py::class_<SystemParams>(m, "SystemParams")
        .def(py::init<>())
        .def_static("table_s1", &SystemParams::table_s1)
        .def_readwrite("omega1_ghz", &SystemParams::omega1_ghz)
        .def_readwrite("omega2_ghz", &SystemParams::omega2_ghz)
        .def_readwrite("omega3_ghz", &SystemParams::omega3_ghz)
        .def_readwrite("omega_r_ghz", &SystemParams::omega_r_ghz)
        .def_readwrite("omega_in_ghz", &SystemParams::omega_in_ghz)
        .def_readwrite("j12_mhz", &SystemParams::j12_mhz)
        .def_readwrite("j23_mhz", &SystemParams::j23_mhz)
        .def_readwrite("j13_mhz", &SystemParams::j13_mhz)
        .def_readwrite("g3_mhz", &SystemParams::g3_mhz)
        .def_readwrite("gamma_b_mhz", &SystemParams::gamma_b_mhz)
        .def_readwrite("gamma_d_mhz", &SystemParams::gamma_d_mhz)
        .def_readwrite("kappa_mhz", &SystemParams::kappa_mhz)
        .def_readwrite("gamma_phi_mhz", &SystemParams::gamma_phi_mhz)
        .def_readwrite("n_th", &SystemParams::n_th)
        .def_readwrite("omega_rabi_mhz", &SystemParams::omega_rabi_mhz)
        .def("j_b3_mhz", &SystemParams::j_b3_mhz)
        .def("j_d3_mhz", &SystemParams::j_d3_mhz)
        .def("omega_b_ghz", &SystemParams::omega_b_ghz)
        .def("omega_d_ghz", &SystemParams::omega_d_ghz);

    py::class_<Superoperator>(m, "Superoperator")
        .def_readonly("hilbert_dim", &Superoperator::hilbert_dim)
        .def_readonly("matrix", &Superoperator::matrix);

    m.def("build_hamiltonian", &build_hamiltonian, py::arg("params"), py::arg("space"));
    m.def("build_liouvillian", &build_liouvillian, py::arg("params"), py::arg("hamiltonian"),
          py::arg("space"));
    m.def("steady_state", &steady_state);
    m.def("evolve", &evolve, py::arg("rho0"), py::arg("liouvillian"), py::arg("t_grid_us"));
    m.def("two_time_correlation", &two_time_correlation);
    m.def("transfer_efficiency", &transfer_efficiency, py::arg("p4"), py::arg("p2"));

    py::enum_<Port>(m, "Port")
        .value("waveguide_2", Port::waveguide_2)
        .value("resonator_4", Port::resonator_4)
        .value("flux_line", Port::flux_line);

    py::class_<SpectrumResult>(m, "SpectrumResult")
        .def(py::init<>())
        .def_readwrite("freq_ghz", &SpectrumResult::freq_ghz)
        .def_readwrite("psd", &SpectrumResult::psd)
        .def_readwrite("port", &SpectrumResult::port)
        .def_readwrite("rayleigh_removed", &SpectrumResult::rayleigh_removed);

    py::class_<TransportSummary>(m, "TransportSummary")
        .def_readonly("p2_photons_per_us", &TransportSummary::p2_photons_per_us)
        .def_readonly("p4_photons_per_us", &TransportSummary::p4_photons_per_us)
        .def_readonly("eta", &TransportSummary::eta);

    py::class_<SpectraConfig>(m, "SpectraConfig")
        .def(py::init<>())
        .def_readwrite("tau_max_us", &SpectraConfig::tau_max_us)
        .def_readwrite("dtau_us", &SpectraConfig::dtau_us)
        .def_readwrite("subtract_coherent", &SpectraConfig::subtract_coherent)
        .def_readwrite("rayleigh_exclusion_mhz", &SpectraConfig::rayleigh_exclusion_mhz);

    py::class_<LindbladRun>(m, "LindbladRun")
        .def_readonly("s2", &LindbladRun::s2)
        .def_readonly("s4", &LindbladRun::s4)
        .def_readonly("rho_ss", &LindbladRun::rho_ss)
        .def_readonly("summary", &LindbladRun::summary);
    m.def("lindblad_run", &lindblad_run, py::arg("params"), py::arg("space"),
          py::arg("config") = SpectraConfig{});
    m.def(
        "integrated_power",
        [](const SpectrumResult& s, std::optional<std::pair<double, double>> exclude) {
            std::optional<FreqWindowGhz> w;
            if (exclude) w = FreqWindowGhz{exclude->first, exclude->second};
            return integrated_power(s, w);
        },
        py::arg("spectrum"), py::arg("exclude_ghz") = std::nullopt);

    py::enum_<NoiseKind>(m, "NoiseKind")
        .value("white", NoiseKind::white)
        .value("lorentzian", NoiseKind::lorentzian)
        .value("coherent_tone", NoiseKind::coherent_tone);

    py::class_<NoiseSpec>(m, "NoiseSpec")
        .def(py::init<>())
        .def_static("white", &NoiseSpec::white, py::arg("a_w_mhz"), py::arg("cutoff_mhz") = 325.0,
                    py::arg("cutoff_width_mhz") = 5.44)
        .def_static("lorentzian", &NoiseSpec::lorentzian, py::arg("a_l_mhz"),
                    py::arg("center_mhz"), py::arg("fwhm_mhz") = 10.0)
        .def_static("lorentzian_from_xi0", &NoiseSpec::lorentzian_from_xi0, py::arg("xi0_mhz"),
                    py::arg("center_mhz"), py::arg("fwhm_mhz") = 10.0)
        .def_static("coherent_tone", &NoiseSpec::coherent_tone, py::arg("amp_mhz"),
                    py::arg("freq_mhz"))
        .def_readwrite("kind", &NoiseSpec::kind)
        .def_readwrite("a_w_mhz", &NoiseSpec::a_w_mhz)
        .def_readwrite("a_l_mhz", &NoiseSpec::a_l_mhz)
        .def_readwrite("center_mhz", &NoiseSpec::center_mhz)
        .def_readwrite("fwhm_mhz", &NoiseSpec::fwhm_mhz)
        .def_readwrite("tone_amp_mhz", &NoiseSpec::tone_amp_mhz)
        .def_readwrite("tone_freq_mhz", &NoiseSpec::tone_freq_mhz)
        .def_readwrite("sample_rate_per_us", &NoiseSpec::sample_rate_per_us)
        .def("wiener_xi0_mhz", &NoiseSpec::wiener_xi0_mhz);

    py::class_<NoiseSeries>(m, "NoiseSeries")
        .def_readonly("samples", &NoiseSeries::samples)
        .def_readonly("dt_us", &NoiseSeries::dt_us)
        .def("rms", &NoiseSeries::rms)
        .def("mean", &NoiseSeries::mean);

    m.def("target_psd", &target_psd, py::arg("spec"), py::arg("nu_mhz"));
    m.def("synthesize_fir", &synthesize_fir, py::arg("spec"), py::arg("n_samples"),
          py::arg("seed"), py::arg("fir_taps") = 4096);
    m.def("wiener_phase_process", &wiener_phase_process, py::arg("xi0_mhz"), py::arg("nu_l_mhz"),
          py::arg("fwhm_mhz"), py::arg("dt_us"), py::arg("n"), py::arg("seed"));
    py::enum_<WelchWindow>(m, "WelchWindow")
        .value("rectangular", WelchWindow::rectangular)
        .value("hann", WelchWindow::hann)
        .value("blackman", WelchWindow::blackman);
    m.def("estimate_psd", &estimate_psd, py::arg("series"), py::arg("segment_length"),
          py::arg("window") = WelchWindow::hann);
    m.def("noise_power_mhz2", &noise_power_mhz2);

    py::class_<DephasingRate>(m, "DephasingRate")
        .def_readonly("rate_mhz", &DephasingRate::rate_mhz)
        .def_readonly("markov_valid", &DephasingRate::markov_valid);
    m.def("dephasing_rate_markov", &dephasing_rate_markov);
    py::class_<DecayFitResult>(m, "DecayFitResult")
        .def_readonly("rate_mhz", &DecayFitResult::rate_mhz)
        .def_readonly("rms_residual", &DecayFitResult::rms_residual)
        .def_readonly("converged", &DecayFitResult::converged);
    m.def(
        "dephasing_rate_finite_cutoff",
        [](const NoiseSpec& spec, int n_traj, std::uint64_t seed) {
            return dephasing_rate_finite_cutoff(spec, {n_traj, seed});
        },
        py::arg("white_spec"), py::arg("n_traj") = 800, py::arg("seed") = 20230615);
    m.def("effective_coupling_mhz", &effective_coupling_mhz);

    py::class_<RateParams>(m, "RateParams")
        .def(py::init<>())
        .def_readwrite("omega_rabi_mhz", &RateParams::omega_rabi_mhz)
        .def_readwrite("gamma_b_mhz", &RateParams::gamma_b_mhz)
        .def_readwrite("gamma_pur_mhz", &RateParams::gamma_pur_mhz)
        .def_readwrite("gamma_phi_b_mhz", &RateParams::gamma_phi_b_mhz)
        .def_readwrite("j_d3_mhz", &RateParams::j_d3_mhz);
    py::class_<TransferRates>(m, "TransferRates")
        .def_readonly("k_gb_mhz", &TransferRates::k_gb_mhz)
        .def_readonly("k_bd_mhz", &TransferRates::k_bd_mhz)
        .def_readonly("k_d3_mhz", &TransferRates::k_d3_mhz);
    py::class_<Populations>(m, "Populations")
        .def_readonly("p_g", &Populations::p_g)
        .def_readonly("p_b", &Populations::p_b)
        .def_readonly("p_d", &Populations::p_d)
        .def_readonly("p_3", &Populations::p_3)
        .def_readonly("residual", &Populations::residual);
    m.def("transfer_rates", &transfer_rates);
    m.def("steady_populations", &steady_populations);
    m.def("rate_efficiency", &rate_efficiency);
    m.def("rate_efficiency_at_optimum", &rate_efficiency_at_optimum, py::arg("gamma_b_mhz"),
          py::arg("gamma_pur_mhz"), py::arg("j_d3_mhz"));
    m.def("efficiency_argmax_mhz", &efficiency_argmax_mhz);

    m.def("transmission_coefficient", &transmission_coefficient, py::arg("detuning_mhz"),
          py::arg("gamma_r_mhz"), py::arg("gamma_phi_mhz"), py::arg("omega_rabi_mhz"));
    m.def("purcell_rate", &purcell_rate, py::arg("g_mhz"), py::arg("kappa_mhz"),
          py::arg("detuning_3r_mhz"));
    py::class_<FluxTuneParams>(m, "FluxTuneParams")
        .def(py::init<>())
        .def_readwrite("omega_max_ghz", &FluxTuneParams::omega_max_ghz)
        .def_readwrite("anharmonicity_mhz", &FluxTuneParams::anharmonicity_mhz)
        .def_readwrite("phi0", &FluxTuneParams::phi0);
    m.def("flux_tune_ghz", &flux_tune_ghz, py::arg("params"), py::arg("phi"));
    m.def("flux_tune_slope_ghz_per_unit", &flux_tune_slope_ghz_per_unit, py::arg("params"),
          py::arg("phi"));
    m.def("mollow_spectrum", &mollow_spectrum, py::arg("nu_ghz"), py::arg("center_ghz"),
          py::arg("omega_rabi_mhz"), py::arg("gamma_mhz"), py::arg("gamma_phi_mhz"),
          py::arg("amplitude"));

    py::class_<FitParameter>(m, "FitParameter")
        .def_readonly("name", &FitParameter::name)
        .def_readonly("value", &FitParameter::value)
        .def_readonly("std_error", &FitParameter::std_error);
    py::class_<FitResult>(m, "FitResult")
        .def_readonly("parameters", &FitResult::parameters)
        .def_readonly("residual_norm", &FitResult::residual_norm)
        .def_readonly("converged", &FitResult::converged)
        .def("value", &FitResult::value);
    py::enum_<MollowMode>(m, "MollowMode")
        .value("full_mollow", MollowMode::full_mollow)
        .value("three_lorentzians", MollowMode::three_lorentzians);
    m.def("mollow_fit", &mollow_fit, py::arg("spectrum"), py::arg("mode"));
    m.def("lorentzian_peak_fit", &lorentzian_peak_fit, py::arg("spectrum"), py::arg("n_peaks"));

    py::class_<StochasticConfig>(m, "StochasticConfig")
        .def(py::init<>())
        .def_readwrite("n_traj", &StochasticConfig::n_traj)
        .def_readwrite("base_seed", &StochasticConfig::base_seed)
        .def_readwrite("dt_us", &StochasticConfig::dt_us)
        .def_readwrite("relax_time_us", &StochasticConfig::relax_time_us)
        .def_readwrite("avg_time_us", &StochasticConfig::avg_time_us)
        .def_readwrite("tau_max_us", &StochasticConfig::tau_max_us)
        .def_readwrite("tau_stride", &StochasticConfig::tau_stride)
        .def_readwrite("n_workers", &StochasticConfig::n_workers);
    py::class_<StochasticMetadata>(m, "StochasticMetadata")
        .def_readonly("relax_time_us", &StochasticMetadata::relax_time_us)
        .def_readonly("dt_us", &StochasticMetadata::dt_us)
        .def_readonly("n_traj", &StochasticMetadata::n_traj)
        .def_readonly("n_failed", &StochasticMetadata::n_failed)
        .def_readonly("qualitative_spectra", &StochasticMetadata::qualitative_spectra);
    py::class_<StochasticSpectra>(m, "StochasticSpectra")
        .def_readonly("s2", &StochasticSpectra::s2)
        .def_readonly("s4", &StochasticSpectra::s4)
        .def_readonly("summary", &StochasticSpectra::summary)
        .def_readonly("meta", &StochasticSpectra::meta);
    py::class_<StochasticPowers>(m, "StochasticPowers")
        .def_readonly("summary", &StochasticPowers::summary)
        .def_readonly("p4_stderr", &StochasticPowers::p4_stderr)
        .def_readonly("effective_coupling_mhz", &StochasticPowers::effective_coupling_mhz)
        .def_readonly("meta", &StochasticPowers::meta);
    m.def("run_stochastic_spectra", &run_stochastic_spectra, py::arg("params"), py::arg("spec"),
          py::arg("config"), py::call_guard<py::gil_scoped_release>());
    m.def("run_stochastic_powers", &run_stochastic_powers, py::arg("params"), py::arg("spec"),
          py::arg("config"), py::call_guard<py::gil_scoped_release>());
    py::class_<DephasingDemo>(m, "DephasingDemo")
        .def_readonly("t_us", &DephasingDemo::t_us)
        .def_readonly("sigma_x", &DephasingDemo::sigma_x)
        .def_readonly("markov_sigma_x", &DephasingDemo::markov_sigma_x)
        .def_readonly("rms_deviation", &DephasingDemo::rms_deviation);
    m.def("single_qubit_dephasing_demo", &single_qubit_dephasing_demo,
          py::arg("gamma_target_mhz"), py::arg("fwhm_mhz"), py::arg("n_traj"), py::arg("seed"),
          py::call_guard<py::gil_scoped_release>());
    m.def("coherent_modulation_scan", &coherent_modulation_scan, py::arg("params"),
          py::arg("amplitude_mhz"), py::arg("nu_c_grid_mhz"), py::arg("config"),
          py::call_guard<py::gil_scoped_release>());

    py::class_<SweepRow>(m, "SweepRow")
        .def_readonly("sweep_value", &SweepRow::sweep_value)
        .def_readonly("p2", &SweepRow::p2)
        .def_readonly("p4", &SweepRow::p4)
        .def_readonly("eta", &SweepRow::eta)
        .def_readonly("gamma_phi_b_mhz", &SweepRow::gamma_phi_b_mhz)
        .def_readonly("k_mhz", &SweepRow::k_mhz);
    py::class_<ScenarioResult>(m, "ScenarioResult")
        .def_readonly("rows", &ScenarioResult::rows)
        .def_readonly("output_dir", &ScenarioResult::output_dir)
        .def_readonly("wall_seconds", &ScenarioResult::wall_seconds);
    m.def("run_scenario_file", &run_scenario_file, py::arg("config_path"),
          py::arg("output_dir"), py::call_guard<py::gil_scoped_release>());

    py::register_exception<ValidationError>(m, "ValidationError");
    py::register_exception<DegenerateSteadyState>(m, "DegenerateSteadyStateError");
}
