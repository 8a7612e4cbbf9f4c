#pragma once

#include "natsim/noise.hpp"
#include "natsim/rate_model.hpp"
#include "natsim/stochastic.hpp"

#include <optional>
#include <string>
#include <vector>

namespace natsim {

inline constexpr const char* version_string = "1.0.0";

/// Raised for config-file problems; carries the offending field path.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class Engine { lindblad, stochastic, rate_eq };
enum class SweepVariable {
    gamma_phi_b_mhz,
    nu_l_mhz,
    xi0_mhz,
    nu_c_mhz,
    amplitude_mhz,
    n_th,
    fwhm_mhz  // single-qubit dephasing demo sweeps the noise bandwidth
};

struct Scenario {
    std::string name;
    Engine engine = Engine::lindblad;
    std::uint64_t seed = 1;
    int resonator_dim = 3;
    SystemParams params;             // resolved (excitation folded in)
    NoiseSpec noise;                 // base noise description
    SweepVariable sweep_variable = SweepVariable::gamma_phi_b_mhz;
    std::vector<double> sweep_grid;
    bool want_spectra = false;
    bool want_fits = false;
    double rayleigh_exclusion_mhz = 35.0;
    SpectraConfig spectra;           // lindblad spectra knobs
    StochasticConfig stochastic;     // stochastic engine knobs
    double rate_gamma_pur_mhz = 0.0;  // 0 = Purcell formula at the scenario detuning
    double demo_gamma_l_mhz = 0.0;    // > 0 makes fwhm_MHz sweeps run the Fig.-S6 demo
    int demo_n_traj = 2000;

    /// gamma_Pur used by the rate engine.
    double effective_gamma_pur_mhz() const;
};

/// Parse + strictly validate a scenario file (unknown keys are rejected,
/// units are part of the key names). Throws ValidationError.
Scenario load_scenario(const std::string& path);

struct SweepRow {
    double sweep_value = 0.0;
    double p2 = 0.0, p4 = 0.0, eta = 0.0;
    double gamma_phi_b_mhz = 0.0;  // white-noise sweeps
    double k_mhz = 0.0;            // structured-noise sweeps
};

struct ScenarioResult {
    std::vector<SweepRow> rows;
    std::string output_dir;
    double wall_seconds = 0.0;
};

/// Run every sweep point and write the result bundle:
/// summary.csv, per-point spectra CSVs, optional fit reports, manifest.json.
ScenarioResult run_scenario(const Scenario& scenario, const std::string& output_dir);
ScenarioResult run_scenario_file(const std::string& config_path, const std::string& output_dir);

struct EngineComparison {
    std::vector<double> grid;                 // gamma_phi_b axis
    std::vector<double> eta_lindblad, eta_rate;
    std::vector<double> p4_lindblad, p4_rate;
    double argmax_lindblad = 0.0, argmax_rate = 0.0;
    double eta_max_lindblad = 0.0, eta_max_rate = 0.0;
    bool argmax_within_30pct = false;
    bool eta_max_within_10pp = false;
    // zero-noise reduction: stochastic with xi0 -> 0 against lindblad gamma_phi = 0
    double p4_stochastic_zero = 0.0, p4_lindblad_zero = 0.0;
    bool reduction_within_5pct = false;
};

/// Cross-check lindblad vs rate_eq on the scenario's gamma_phi_b grid, plus
/// the xi0 = 0 stochastic reduction point. Requires a white-noise scenario.
EngineComparison compare_engines(const Scenario& scenario);

/// Write the comparison as JSON next to a one-line-per-point text table.
void write_comparison(const EngineComparison& cmp, const std::string& output_dir);

}  // namespace natsim
