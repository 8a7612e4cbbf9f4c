#include "natsim/scenario.hpp"

#include "detail/parallel.hpp"
#include "natsim/spectro.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace natsim {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void require_keys(const json& obj, const std::string& path,
                  const std::vector<std::string>& allowed) {
    if (!obj.is_object()) throw ValidationError(path + ": expected an object");
    for (const auto& [key, _] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ValidationError(path + ": unknown key '" + key + "'");
    }
}

double get_num(const json& obj, const std::string& path, const std::string& key,
               std::optional<double> fallback = std::nullopt) {
    if (!obj.contains(key)) {
        if (fallback) return *fallback;
        throw ValidationError(path + "." + key + ": required");
    }
    if (!obj[key].is_number()) throw ValidationError(path + "." + key + ": expected a number");
    return obj[key].get<double>();
}

std::string get_str(const json& obj, const std::string& path, const std::string& key,
                    std::optional<std::string> fallback = std::nullopt) {
    if (!obj.contains(key)) {
        if (fallback) return *fallback;
        throw ValidationError(path + "." + key + ": required");
    }
    if (!obj[key].is_string()) throw ValidationError(path + "." + key + ": expected a string");
    return obj[key].get<std::string>();
}

SystemParams parse_params(const json& j, const std::string& path) {
    SystemParams p = SystemParams::table_s1();
    require_keys(j, path,
                 {"omega1_GHz", "omega2_GHz", "omega3_GHz", "omega_r_GHz", "omega_in_GHz",
                  "J12_MHz", "J23_MHz", "J13_MHz", "g3_MHz", "gamma_b_MHz", "gamma_d_MHz",
                  "kappa_MHz", "gamma_phi_MHz", "n_th", "omega_rabi_MHz"});
    p.omega1_ghz = get_num(j, path, "omega1_GHz", p.omega1_ghz);
    p.omega2_ghz = get_num(j, path, "omega2_GHz", p.omega2_ghz);
    p.omega3_ghz = get_num(j, path, "omega3_GHz", p.omega3_ghz);
    p.omega_r_ghz = get_num(j, path, "omega_r_GHz", p.omega_r_ghz);
    p.omega_in_ghz = get_num(j, path, "omega_in_GHz", p.omega_in_ghz);
    p.j12_mhz = get_num(j, path, "J12_MHz", p.j12_mhz);
    p.j23_mhz = get_num(j, path, "J23_MHz", p.j23_mhz);
    p.j13_mhz = get_num(j, path, "J13_MHz", p.j13_mhz);
    p.g3_mhz = get_num(j, path, "g3_MHz", p.g3_mhz);
    p.gamma_b_mhz = get_num(j, path, "gamma_b_MHz", p.gamma_b_mhz);
    p.gamma_d_mhz = get_num(j, path, "gamma_d_MHz", p.gamma_d_mhz);
    p.kappa_mhz = get_num(j, path, "kappa_MHz", p.kappa_mhz);
    p.gamma_phi_mhz = get_num(j, path, "gamma_phi_MHz", p.gamma_phi_mhz);
    p.n_th = get_num(j, path, "n_th", p.n_th);
    p.omega_rabi_mhz = get_num(j, path, "omega_rabi_MHz", p.omega_rabi_mhz);
    return p;
}

json params_to_json(const SystemParams& p) {
    return json{{"omega1_GHz", p.omega1_ghz},   {"omega2_GHz", p.omega2_ghz},
                {"omega3_GHz", p.omega3_ghz},   {"omega_r_GHz", p.omega_r_ghz},
                {"omega_in_GHz", p.omega_in_ghz}, {"J12_MHz", p.j12_mhz},
                {"J23_MHz", p.j23_mhz},         {"J13_MHz", p.j13_mhz},
                {"g3_MHz", p.g3_mhz},           {"gamma_b_MHz", p.gamma_b_mhz},
                {"gamma_d_MHz", p.gamma_d_mhz}, {"kappa_MHz", p.kappa_mhz},
                {"gamma_phi_MHz", p.gamma_phi_mhz}, {"n_th", p.n_th},
                {"omega_rabi_MHz", p.omega_rabi_mhz}};
}

NoiseSpec parse_noise(const json& j, const std::string& path) {
    const std::string kind = get_str(j, path, "kind");
    if (kind == "white") {
        require_keys(j, path, {"kind", "A_W_MHz", "cutoff_MHz", "cutoff_width_MHz"});
        return NoiseSpec::white(get_num(j, path, "A_W_MHz", 0.0),
                                get_num(j, path, "cutoff_MHz", 325.0),
                                get_num(j, path, "cutoff_width_MHz", 5.44));
    }
    if (kind == "lorentzian") {
        require_keys(j, path, {"kind", "A_L_MHz", "xi0_MHz", "nu_L_MHz", "fwhm_MHz"});
        const double center = get_num(j, path, "nu_L_MHz", 190.0);
        const double fwhm = get_num(j, path, "fwhm_MHz", 10.0);
        if (j.contains("xi0_MHz"))
            return NoiseSpec::lorentzian_from_xi0(get_num(j, path, "xi0_MHz"), center, fwhm);
        return NoiseSpec::lorentzian(get_num(j, path, "A_L_MHz"), center, fwhm);
    }
    if (kind == "coherent_tone") {
        require_keys(j, path, {"kind", "amplitude_MHz", "nu_c_MHz"});
        return NoiseSpec::coherent_tone(get_num(j, path, "amplitude_MHz"),
                                        get_num(j, path, "nu_c_MHz", 190.0));
    }
    throw ValidationError(path + ".kind: unknown noise kind '" + kind + "'");
}

json noise_to_json(const NoiseSpec& n) {
    switch (n.kind) {
        case NoiseKind::white:
            return json{{"kind", "white"},
                        {"A_W_MHz", n.a_w_mhz},
                        {"cutoff_MHz", n.cutoff_mhz},
                        {"cutoff_width_MHz", n.cutoff_width_mhz}};
        case NoiseKind::lorentzian:
            return json{{"kind", "lorentzian"},
                        {"A_L_MHz", n.a_l_mhz},
                        {"nu_L_MHz", n.center_mhz},
                        {"fwhm_MHz", n.fwhm_mhz}};
        case NoiseKind::coherent_tone:
            return json{{"kind", "coherent_tone"},
                        {"amplitude_MHz", n.tone_amp_mhz},
                        {"nu_c_MHz", n.tone_freq_mhz}};
    }
    return {};
}

SweepVariable parse_sweep_variable(const std::string& s, const std::string& path) {
    if (s == "gamma_phi_b_MHz") return SweepVariable::gamma_phi_b_mhz;
    if (s == "nu_L_MHz") return SweepVariable::nu_l_mhz;
    if (s == "xi0_MHz") return SweepVariable::xi0_mhz;
    if (s == "nu_c_MHz") return SweepVariable::nu_c_mhz;
    if (s == "amplitude_MHz") return SweepVariable::amplitude_mhz;
    if (s == "n_th") return SweepVariable::n_th;
    if (s == "fwhm_MHz") return SweepVariable::fwhm_mhz;
    throw ValidationError(path + ": unknown sweep variable '" + s + "'");
}

const char* sweep_variable_name(SweepVariable v) {
    switch (v) {
        case SweepVariable::gamma_phi_b_mhz: return "gamma_phi_b_MHz";
        case SweepVariable::nu_l_mhz: return "nu_L_MHz";
        case SweepVariable::xi0_mhz: return "xi0_MHz";
        case SweepVariable::nu_c_mhz: return "nu_c_MHz";
        case SweepVariable::amplitude_mhz: return "amplitude_MHz";
        case SweepVariable::n_th: return "n_th";
        case SweepVariable::fwhm_mhz: return "fwhm_MHz";
    }
    return "?";
}

void validate_scenario(const Scenario& s) {
    if (s.sweep_grid.empty()) throw ValidationError("$.sweep.grid: must be nonempty");
    for (std::size_t i = 1; i < s.sweep_grid.size(); ++i)
        if (s.sweep_grid[i] <= s.sweep_grid[i - 1])
            throw ValidationError("$.sweep.grid: must be strictly increasing");
    if (s.resonator_dim < 2) throw ValidationError("$.resonator_dim: must be >= 2");

    const bool structured =
        s.noise.kind == NoiseKind::lorentzian || s.noise.kind == NoiseKind::coherent_tone;
    if (s.engine == Engine::stochastic && !structured)
        throw ValidationError(
            "$.engine: stochastic requires lorentzian or coherent_tone noise "
            "(white noise maps exactly to gamma_phi in the lindblad engine)");
    if (s.engine != Engine::stochastic && structured)
        throw ValidationError("$.noise.kind: structured noise requires the stochastic engine");

    if (s.sweep_variable == SweepVariable::fwhm_mhz) {
        if (s.demo_gamma_l_mhz <= 0.0)
            throw ValidationError(
                "$.single_qubit_demo.gamma_L_MHz: required for fwhm_MHz sweeps");
        return;
    }
    const bool white_sweep = s.sweep_variable == SweepVariable::gamma_phi_b_mhz ||
                             s.sweep_variable == SweepVariable::n_th;
    if (s.engine == Engine::stochastic && white_sweep)
        throw ValidationError("$.sweep.variable: incompatible with the stochastic engine");
    if (s.engine != Engine::stochastic && !white_sweep)
        throw ValidationError("$.sweep.variable: requires the stochastic engine");
    if (s.engine == Engine::rate_eq && s.sweep_variable != SweepVariable::gamma_phi_b_mhz)
        throw ValidationError("$.sweep.variable: rate_eq sweeps gamma_phi_b_MHz only");
}

Scenario parse_scenario(const json& root) {
    require_keys(root, "$",
                 {"name", "engine", "seed", "resonator_dim", "excitation", "params", "noise",
                  "sweep", "outputs", "spectra", "stochastic", "rayleigh_exclusion_MHz",
                  "rate_model", "single_qubit_demo"});
    Scenario s;
    s.name = get_str(root, "$", "name");
    const std::string engine = get_str(root, "$", "engine");
    if (engine == "lindblad") s.engine = Engine::lindblad;
    else if (engine == "stochastic") s.engine = Engine::stochastic;
    else if (engine == "rate_eq") s.engine = Engine::rate_eq;
    else throw ValidationError("$.engine: unknown engine '" + engine + "'");

    s.seed = std::uint64_t(get_num(root, "$", "seed", 1.0));
    s.resonator_dim = int(get_num(root, "$", "resonator_dim", 3.0));
    s.params = root.contains("params") ? parse_params(root["params"], "$.params")
                                       : SystemParams::table_s1();

    if (root.contains("excitation")) {
        const json& e = root["excitation"];
        require_keys(e, "$.excitation", {"kind", "omega_rabi_MHz", "n_th"});
        const std::string kind = get_str(e, "$.excitation", "kind");
        if (kind == "coherent") {
            s.params.omega_rabi_mhz = get_num(e, "$.excitation", "omega_rabi_MHz", 14.0);
        } else if (kind == "incoherent") {
            s.params.omega_rabi_mhz = 0.0;
            s.params.n_th = get_num(e, "$.excitation", "n_th", 0.3);
        } else {
            throw ValidationError("$.excitation.kind: must be 'coherent' or 'incoherent'");
        }
    }

    if (root.contains("noise")) s.noise = parse_noise(root["noise"], "$.noise");
    else s.noise = NoiseSpec::white(0.0);

    if (!root.contains("sweep")) throw ValidationError("$.sweep: required");
    const json& sw = root["sweep"];
    require_keys(sw, "$.sweep", {"variable", "grid"});
    s.sweep_variable = parse_sweep_variable(get_str(sw, "$.sweep", "variable"), "$.sweep.variable");
    if (!sw.contains("grid") || !sw["grid"].is_array())
        throw ValidationError("$.sweep.grid: expected an array");
    for (const auto& v : sw["grid"]) {
        if (!v.is_number()) throw ValidationError("$.sweep.grid: expected numbers");
        s.sweep_grid.push_back(v.get<double>());
    }

    if (root.contains("outputs")) {
        if (!root["outputs"].is_array()) throw ValidationError("$.outputs: expected an array");
        for (const auto& v : root["outputs"]) {
            const std::string o = v.get<std::string>();
            if (o == "spectra") s.want_spectra = true;
            else if (o == "fits") s.want_fits = true;
            else if (o != "powers" && o != "efficiency")
                throw ValidationError("$.outputs: unknown product '" + o + "'");
        }
    }
    s.rayleigh_exclusion_mhz = get_num(root, "$", "rayleigh_exclusion_MHz", 35.0);
    s.spectra.rayleigh_exclusion_mhz = s.rayleigh_exclusion_mhz;

    if (root.contains("spectra")) {
        const json& sp = root["spectra"];
        require_keys(sp, "$.spectra", {"tau_max_us", "dtau_ns"});
        s.spectra.tau_max_us = get_num(sp, "$.spectra", "tau_max_us", s.spectra.tau_max_us);
        s.spectra.dtau_us = get_num(sp, "$.spectra", "dtau_ns", s.spectra.dtau_us * 1e3) * 1e-3;
    }
    if (root.contains("stochastic")) {
        const json& st = root["stochastic"];
        require_keys(st, "$.stochastic",
                     {"n_traj", "dt_ns", "relax_us", "avg_us", "tau_max_us", "tau_stride"});
        s.stochastic.n_traj = int(get_num(st, "$.stochastic", "n_traj", 200.0));
        s.stochastic.dt_us = get_num(st, "$.stochastic", "dt_ns", 0.0) * 1e-3;
        s.stochastic.relax_time_us = get_num(st, "$.stochastic", "relax_us", 0.0);
        s.stochastic.avg_time_us = get_num(st, "$.stochastic", "avg_us", 6.0);
        s.stochastic.tau_max_us = get_num(st, "$.stochastic", "tau_max_us", 1.5);
        s.stochastic.tau_stride = int(get_num(st, "$.stochastic", "tau_stride", 5.0));
    }
    s.stochastic.base_seed = s.seed;
    if (root.contains("rate_model")) {
        require_keys(root["rate_model"], "$.rate_model", {"gamma_pur_MHz"});
        s.rate_gamma_pur_mhz = get_num(root["rate_model"], "$.rate_model", "gamma_pur_MHz", 0.0);
    }
    if (root.contains("single_qubit_demo")) {
        const json& d = root["single_qubit_demo"];
        require_keys(d, "$.single_qubit_demo", {"gamma_L_MHz", "n_traj"});
        s.demo_gamma_l_mhz = get_num(d, "$.single_qubit_demo", "gamma_L_MHz");
        s.demo_n_traj = int(get_num(d, "$.single_qubit_demo", "n_traj", 2000.0));
    }

    validate_scenario(s);
    return s;
}

}  // namespace

double Scenario::effective_gamma_pur_mhz() const {
    if (rate_gamma_pur_mhz > 0.0) return rate_gamma_pur_mhz;
    return purcell_rate(params.g3_mhz, params.kappa_mhz,
                        (params.omega3_ghz - params.omega_r_ghz) * 1e3);
}

Scenario load_scenario(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("cannot open scenario file: " + path);
    json root;
    try {
        root = json::parse(f);
    } catch (const std::exception& e) {
        throw ValidationError(std::string("JSON parse error in ") + path + ": " + e.what());
    }
    // a manifest is reproducible input: its embedded scenario is authoritative
    if (root.is_object() && root.contains("manifest_version") && root.contains("scenario"))
        return parse_scenario(root["scenario"]);
    return parse_scenario(root);
}

namespace {

std::string point_tag(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "point_%03zu", i);
    return buf;
}

void write_spectrum_csv(const SpectrumResult& s, const fs::path& path, double lo_ghz,
                        double hi_ghz) {
    std::ofstream f(path);
    f << "freq_GHz,psd_photons_per_s_per_Hz\n";
    char buf[64];
    for (std::size_t i = 0; i < s.freq_ghz.size(); ++i) {
        if (s.freq_ghz[i] < lo_ghz || s.freq_ghz[i] > hi_ghz) continue;
        std::snprintf(buf, sizeof(buf), "%.10g,%.10g\n", s.freq_ghz[i], s.psd[i]);
        f << buf;
    }
}

json fit_to_json(const FitResult& fit) {
    json out;
    out["converged"] = fit.converged;
    out["residual_norm"] = fit.residual_norm;
    json params = json::object();
    for (const auto& p : fit.parameters)
        params[p.name] = json{{"value", p.value}, {"std_error", p.std_error}};
    out["parameters"] = params;
    return out;
}

struct PointOutput {
    SweepRow row;
    std::optional<SpectrumResult> s2, s4;
    std::optional<DephasingDemo> demo;
    json extra;  // per-point metadata for the manifest
};

PointOutput run_point(const Scenario& sc, double value) {
    PointOutput out;
    out.row.sweep_value = value;
    const HilbertSpace space(3, sc.resonator_dim);

    if (sc.sweep_variable == SweepVariable::fwhm_mhz) {
        out.demo = single_qubit_dephasing_demo(sc.demo_gamma_l_mhz, value, sc.demo_n_traj,
                                               sc.seed);
        out.extra["rms_deviation_from_markov"] = out.demo->rms_deviation;
        out.extra["gamma_L_MHz"] = sc.demo_gamma_l_mhz;
        return out;
    }

    switch (sc.engine) {
        case Engine::lindblad: {
            SystemParams p = sc.params;
            if (sc.sweep_variable == SweepVariable::gamma_phi_b_mhz)
                p.gamma_phi_mhz = 2.0 * value;  // gamma_phi = 2 gamma_phi^b
            else
                p.n_th = value;
            const auto run = lindblad_run(p, space, sc.spectra);
            out.row.p2 = run.summary.p2_photons_per_us;
            out.row.p4 = run.summary.p4_photons_per_us;
            out.row.eta = run.summary.eta;
            out.row.gamma_phi_b_mhz = p.gamma_phi_mhz / 2.0;
            if (sc.want_spectra || sc.want_fits) {
                out.s2 = run.s2;
                out.s4 = run.s4;
            }
            break;
        }
        case Engine::rate_eq: {
            RateParams rp;
            rp.omega_rabi_mhz = sc.params.omega_rabi_mhz;
            rp.gamma_b_mhz = sc.params.gamma_b_mhz;
            rp.gamma_pur_mhz = sc.effective_gamma_pur_mhz();
            rp.j_d3_mhz = sc.params.j_d3_mhz();
            rp.gamma_phi_b_mhz = value;
            const auto pops = steady_populations(rp);
            out.row.p2 = two_pi * (rp.gamma_b_mhz / 2.0) * pops.p_b;
            out.row.p4 = two_pi * rp.gamma_pur_mhz * pops.p_3;
            out.row.eta = rate_efficiency(rp);
            out.row.gamma_phi_b_mhz = value;
            out.extra["populations"] =
                json{{"p_g", pops.p_g}, {"p_b", pops.p_b}, {"p_d", pops.p_d}, {"p_3", pops.p_3}};
            break;
        }
        case Engine::stochastic: {
            NoiseSpec spec = sc.noise;
            if (sc.sweep_variable == SweepVariable::nu_l_mhz) spec.center_mhz = value;
            if (sc.sweep_variable == SweepVariable::xi0_mhz)
                spec = NoiseSpec::lorentzian_from_xi0(value, spec.center_mhz, spec.fwhm_mhz);
            if (sc.sweep_variable == SweepVariable::nu_c_mhz) spec.tone_freq_mhz = value;
            if (sc.sweep_variable == SweepVariable::amplitude_mhz) spec.tone_amp_mhz = value;

            StochasticConfig cfg = sc.stochastic;
            // single-point scans parallelize over trajectories instead
            cfg.n_workers = sc.sweep_grid.size() > 1 ? 1 : 0;
            if (spec.kind == NoiseKind::coherent_tone) cfg.n_traj = 1;
            if (sc.want_spectra || sc.want_fits) {
                const auto run = run_stochastic_spectra(sc.params, spec, cfg);
                out.row.p2 = run.summary.p2_photons_per_us;
                out.row.p4 = run.summary.p4_photons_per_us;
                out.row.eta = run.summary.eta;
                out.s2 = run.s2;
                out.s4 = run.s4;
                out.extra["relax_time_us"] = run.meta.relax_time_us;
                out.extra["dt_us"] = run.meta.dt_us;
                out.extra["n_failed"] = run.meta.n_failed;
                out.extra["qualitative_spectra"] = true;
            } else {
                const auto run = run_stochastic_powers(sc.params, spec, cfg);
                out.row.p2 = run.summary.p2_photons_per_us;
                out.row.p4 = run.summary.p4_photons_per_us;
                out.row.eta = run.summary.eta;
                out.extra["relax_time_us"] = run.meta.relax_time_us;
                out.extra["dt_us"] = run.meta.dt_us;
                out.extra["p4_stderr"] = run.p4_stderr;
            }
            if (spec.kind == NoiseKind::lorentzian)
                out.row.k_mhz = std::sqrt(2.0) * spec.wiener_xi0_mhz();
            else
                out.row.k_mhz = std::sqrt(2.0) * spec.tone_amp_mhz;
            break;
        }
    }
    return out;
}

}  // namespace

ScenarioResult run_scenario(const Scenario& sc, const std::string& output_dir) {
    const auto t0 = std::chrono::steady_clock::now();
    fs::create_directories(output_dir);

    // sweep points are dispatched to the worker pool; output ordering is by
    // sweep index regardless of completion order
    std::vector<PointOutput> points(sc.sweep_grid.size());
    detail::parallel_for(int(sc.sweep_grid.size()),
                         detail::worker_count(sc.stochastic.n_workers), [&](int i) {
                             points[std::size_t(i)] = run_point(sc, sc.sweep_grid[std::size_t(i)]);
                         });

    ScenarioResult result;
    result.output_dir = output_dir;

    // summary table, fixed formatting so reruns are byte-identical
    {
        std::ofstream f(fs::path(output_dir) / "summary.csv");
        f << "sweep_value,P2_photons_per_us,P4_photons_per_us,eta,gamma_phi_b_MHz,K_MHz\n";
        char buf[160];
        for (const auto& pt : points) {
            std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                          pt.row.sweep_value, pt.row.p2, pt.row.p4, pt.row.eta,
                          pt.row.gamma_phi_b_mhz, pt.row.k_mhz);
            f << buf;
            result.rows.push_back(pt.row);
        }
    }

    const double band_lo = sc.params.omega_d_ghz() - 0.15;
    const double band_hi = sc.params.omega_in_ghz + 0.15;
    json point_meta = json::array();
    for (std::size_t i = 0; i < points.size(); ++i) {
        auto& pt = points[i];
        if (sc.want_spectra && pt.s2 && pt.s4) {
            write_spectrum_csv(*pt.s2, fs::path(output_dir) / (point_tag(i) + "_S2.csv"),
                               band_lo, band_hi);
            write_spectrum_csv(*pt.s4, fs::path(output_dir) / (point_tag(i) + "_S4.csv"),
                               band_lo, band_hi);
        }
        if (pt.demo) {
            std::ofstream f(fs::path(output_dir) / (point_tag(i) + "_sigma_x.csv"));
            f << "t_us,sigma_x,markov_sigma_x\n";
            char buf[96];
            for (std::size_t k = 0; k < pt.demo->t_us.size(); ++k) {
                std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g\n", pt.demo->t_us[k],
                              pt.demo->sigma_x[k], pt.demo->markov_sigma_x[k]);
                f << buf;
            }
        }
        if (sc.want_fits && pt.s4) {
            // doublet analysis of the extraction-port spectrum in the dark band
            SpectrumResult band;
            band.port = pt.s4->port;
            for (std::size_t k = 0; k < pt.s4->freq_ghz.size(); ++k) {
                const double f = pt.s4->freq_ghz[k];
                if (f >= sc.params.omega_d_ghz() - 0.1 && f <= sc.params.omega_d_ghz() + 0.1) {
                    band.freq_ghz.push_back(f);
                    band.psd.push_back(pt.s4->psd[k]);
                }
            }
            const auto fit = lorentzian_peak_fit(band, 2);
            std::ofstream f(fs::path(output_dir) / (point_tag(i) + "_S4_fit.json"));
            f << fit_to_json(fit).dump(2) << '\n';
            pt.extra["s4_fit"] = fit_to_json(fit);
        }
        point_meta.push_back(pt.extra.is_null() ? json::object() : pt.extra);
    }

    const auto t1 = std::chrono::steady_clock::now();
    result.wall_seconds = std::chrono::duration<double>(t1 - t0).count();

    json manifest;
    manifest["manifest_version"] = 1;
    manifest["natsim_version"] = version_string;
    json sweep;
    sweep["variable"] = sweep_variable_name(sc.sweep_variable);
    sweep["grid"] = sc.sweep_grid;
    json stoch;
    stoch["n_traj"] = sc.stochastic.n_traj;
    stoch["dt_ns"] = sc.stochastic.dt_us * 1e3;
    stoch["relax_us"] = sc.stochastic.relax_time_us;
    stoch["avg_us"] = sc.stochastic.avg_time_us;
    stoch["tau_max_us"] = sc.stochastic.tau_max_us;
    stoch["tau_stride"] = sc.stochastic.tau_stride;
    json scenario_json;
    scenario_json["name"] = sc.name;
    scenario_json["engine"] = sc.engine == Engine::lindblad
                                  ? "lindblad"
                                  : (sc.engine == Engine::stochastic ? "stochastic" : "rate_eq");
    scenario_json["seed"] = sc.seed;
    scenario_json["resonator_dim"] = sc.resonator_dim;
    scenario_json["params"] = params_to_json(sc.params);
    scenario_json["noise"] = noise_to_json(sc.noise);
    scenario_json["sweep"] = sweep;
    scenario_json["rayleigh_exclusion_MHz"] = sc.rayleigh_exclusion_mhz;
    scenario_json["spectra"] = json{{"tau_max_us", sc.spectra.tau_max_us},
                                    {"dtau_ns", sc.spectra.dtau_us * 1e3}};
    scenario_json["stochastic"] = stoch;
    scenario_json["rate_model"] = json{{"gamma_pur_MHz", sc.rate_gamma_pur_mhz}};
    if (sc.demo_gamma_l_mhz > 0.0)
        scenario_json["single_qubit_demo"] =
            json{{"gamma_L_MHz", sc.demo_gamma_l_mhz}, {"n_traj", sc.demo_n_traj}};
    json outputs = json::array();
    outputs.push_back("powers");
    if (sc.want_spectra) outputs.push_back("spectra");
    if (sc.want_fits) outputs.push_back("fits");
    scenario_json["outputs"] = outputs;
    manifest["scenario"] = scenario_json;
    manifest["wall_seconds"] = result.wall_seconds;
    manifest["points"] = point_meta;
    std::ofstream mf(fs::path(output_dir) / "manifest.json");
    mf << manifest.dump(2) << '\n';

    return result;
}

ScenarioResult run_scenario_file(const std::string& config_path, const std::string& output_dir) {
    return run_scenario(load_scenario(config_path), output_dir);
}

EngineComparison compare_engines(const Scenario& sc) {
    if (sc.sweep_variable != SweepVariable::gamma_phi_b_mhz)
        throw ValidationError("compare_engines: needs a gamma_phi_b_MHz sweep scenario");

    EngineComparison cmp;
    cmp.grid = sc.sweep_grid;

    Scenario lind = sc;
    lind.engine = Engine::lindblad;
    lind.want_spectra = false;
    lind.want_fits = false;
    Scenario rate = lind;
    rate.engine = Engine::rate_eq;

    const HilbertSpace space(3, sc.resonator_dim);
    for (double v : sc.sweep_grid) {
        auto lp = run_point(lind, v);
        auto rp = run_point(rate, v);
        cmp.eta_lindblad.push_back(lp.row.eta);
        cmp.p4_lindblad.push_back(lp.row.p4);
        cmp.eta_rate.push_back(rp.row.eta);
        cmp.p4_rate.push_back(rp.row.p4);
    }
    const auto imax_l = std::size_t(
        std::max_element(cmp.eta_lindblad.begin(), cmp.eta_lindblad.end()) -
        cmp.eta_lindblad.begin());
    const auto imax_r = std::size_t(std::max_element(cmp.eta_rate.begin(), cmp.eta_rate.end()) -
                                    cmp.eta_rate.begin());
    cmp.argmax_lindblad = sc.sweep_grid[imax_l];
    cmp.argmax_rate = sc.sweep_grid[imax_r];
    cmp.eta_max_lindblad = cmp.eta_lindblad[imax_l];
    cmp.eta_max_rate = cmp.eta_rate[imax_r];
    cmp.argmax_within_30pct =
        std::abs(cmp.argmax_rate - cmp.argmax_lindblad) <=
        0.3 * std::max(cmp.argmax_lindblad, 1e-12);
    cmp.eta_max_within_10pp = std::abs(cmp.eta_max_rate - cmp.eta_max_lindblad) <= 0.10;

    // xi0 -> 0 stochastic reduction against the gamma_phi = 0 lindblad point
    SystemParams p0 = sc.params;
    p0.gamma_phi_mhz = 0.0;
    StochasticConfig cfg = sc.stochastic;
    cfg.n_traj = 1;  // xi = 0 is deterministic
    const NoiseSpec zero = NoiseSpec::lorentzian_from_xi0(0.0, 190.0, 10.0);
    const auto st = run_stochastic_powers(p0, zero, cfg);
    const auto lb = lindblad_run(p0, space, sc.spectra);
    cmp.p4_stochastic_zero = st.summary.p4_photons_per_us;
    // compare against the unwindowed inelastic P4 (the stochastic powers path
    // integrates everything inelastic)
    const auto mom = port_moments(lb.rho_ss, space);
    cmp.p4_lindblad_zero =
        two_pi * sc.params.kappa_mhz * (mom.photon_number - std::norm(mom.field_amplitude));
    cmp.reduction_within_5pct =
        std::abs(cmp.p4_stochastic_zero - cmp.p4_lindblad_zero) <=
        0.05 * std::max(cmp.p4_lindblad_zero, 1e-12);
    return cmp;
}

void write_comparison(const EngineComparison& cmp, const std::string& output_dir) {
    fs::create_directories(output_dir);
    json out;
    out["gamma_phi_b_MHz"] = cmp.grid;
    out["eta_lindblad"] = cmp.eta_lindblad;
    out["eta_rate_eq"] = cmp.eta_rate;
    out["P4_lindblad"] = cmp.p4_lindblad;
    out["P4_rate_eq"] = cmp.p4_rate;
    out["argmax_lindblad_MHz"] = cmp.argmax_lindblad;
    out["argmax_rate_MHz"] = cmp.argmax_rate;
    out["eta_max_lindblad"] = cmp.eta_max_lindblad;
    out["eta_max_rate"] = cmp.eta_max_rate;
    out["argmax_within_30pct"] = cmp.argmax_within_30pct;
    out["eta_max_within_10pp"] = cmp.eta_max_within_10pp;
    out["P4_stochastic_xi0_zero"] = cmp.p4_stochastic_zero;
    out["P4_lindblad_gamma_phi_zero"] = cmp.p4_lindblad_zero;
    out["reduction_within_5pct"] = cmp.reduction_within_5pct;
    std::ofstream f(fs::path(output_dir) / "engine_comparison.json");
    f << out.dump(2) << '\n';

    std::ofstream t(fs::path(output_dir) / "engine_comparison.txt");
    t << "gamma_phi_b_MHz  eta_lindblad  eta_rate_eq  P4_lindblad  P4_rate_eq\n";
    char buf[160];
    for (std::size_t i = 0; i < cmp.grid.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%15.6g  %12.6g  %11.6g  %11.6g  %10.6g\n", cmp.grid[i],
                      cmp.eta_lindblad[i], cmp.eta_rate[i], cmp.p4_lindblad[i], cmp.p4_rate[i]);
        t << buf;
    }
}

}  // namespace natsim
