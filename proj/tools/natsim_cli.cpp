#include "natsim/scenario.hpp"
#include "natsim/spectro.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

natsim::SpectrumResult read_spectrum_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw natsim::ValidationError("cannot open spectrum file: " + path);
    natsim::SpectrumResult s;
    std::string line;
    std::getline(f, line);  // header
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw natsim::ValidationError("malformed spectrum line: " + line);
        s.freq_ghz.push_back(std::stod(line.substr(0, comma)));
        s.psd.push_back(std::stod(line.substr(comma + 1)));
    }
    if (s.freq_ghz.size() < 8) throw natsim::ValidationError("spectrum file too short: " + path);
    return s;
}

int cmd_run(const std::string& config, const std::string& outdir) {
    const auto result = natsim::run_scenario_file(config, outdir);
    std::cout << "wrote " << result.rows.size() << " sweep points to " << result.output_dir
              << " in " << result.wall_seconds << " s\n";
    for (const auto& r : result.rows)
        std::cout << "  sweep=" << r.sweep_value << "  P2=" << r.p2 << "  P4=" << r.p4
                  << "  eta=" << r.eta << '\n';
    return kExitOk;
}

int cmd_compare(const std::string& config, const std::string& outdir) {
    const auto sc = natsim::load_scenario(config);
    const auto cmp = natsim::compare_engines(sc);
    natsim::write_comparison(cmp, outdir);
    std::cout << "argmax lindblad " << cmp.argmax_lindblad << " MHz vs rate_eq "
              << cmp.argmax_rate << " MHz (within 30%: " << (cmp.argmax_within_30pct ? "yes" : "no")
              << ")\n";
    std::cout << "eta_max lindblad " << cmp.eta_max_lindblad << " vs rate_eq " << cmp.eta_max_rate
              << " (within 10pp: " << (cmp.eta_max_within_10pp ? "yes" : "no") << ")\n";
    std::cout << "xi0=0 reduction P4 " << cmp.p4_stochastic_zero << " vs lindblad "
              << cmp.p4_lindblad_zero
              << " (within 5%: " << (cmp.reduction_within_5pct ? "yes" : "no") << ")\n";
    return kExitOk;
}

int cmd_noise_gen(const std::string& spec_path, const std::string& out_path, std::size_t n,
                  std::uint64_t seed) {
    std::ifstream f(spec_path);
    if (!f) throw natsim::ValidationError("cannot open noise spec: " + spec_path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(f);
    } catch (const std::exception& e) {
        throw natsim::ValidationError(std::string("JSON parse error: ") + e.what());
    }
    natsim::NoiseSpec spec;
    const std::string kind = j.value("kind", "white");
    if (kind == "white")
        spec = natsim::NoiseSpec::white(j.value("A_W_MHz", 1.0), j.value("cutoff_MHz", 325.0),
                                        j.value("cutoff_width_MHz", 5.44));
    else if (kind == "lorentzian")
        spec = natsim::NoiseSpec::lorentzian(j.value("A_L_MHz", 1.0), j.value("nu_L_MHz", 190.0),
                                             j.value("fwhm_MHz", 10.0));
    else if (kind == "coherent_tone")
        spec = natsim::NoiseSpec::coherent_tone(j.value("amplitude_MHz", 1.0),
                                                j.value("nu_c_MHz", 190.0));
    else
        throw natsim::ValidationError("noise spec kind must be white/lorentzian/coherent_tone");
    if (j.contains("sample_rate_per_us")) spec.sample_rate_per_us = j["sample_rate_per_us"];

    natsim::NoiseSeries series;
    if (kind == "lorentzian" && j.value("wiener", true)) {
        const double dt = 1.0 / spec.sample_rate_per_us;
        series = natsim::wiener_phase_process(spec.wiener_xi0_mhz(), spec.center_mhz,
                                              spec.fwhm_mhz, dt, n, seed);
    } else {
        series = natsim::synthesize_fir(spec, n, seed);
    }
    if (out_path.size() > 4 && out_path.substr(out_path.size() - 4) == ".bin")
        natsim::write_noise_bin(series, out_path);
    else
        natsim::write_noise_csv(series, out_path);
    std::cout << "wrote " << series.samples.size() << " samples (dt = " << series.dt_us
              << " us, K = " << natsim::effective_coupling_mhz(series) << " MHz) to " << out_path
              << '\n';
    return kExitOk;
}

int cmd_fit(const std::string& spectrum_path, const std::string& model) {
    const auto spec = read_spectrum_csv(spectrum_path);
    natsim::FitResult fit;
    if (model == "lorentzian1")
        fit = natsim::lorentzian_peak_fit(spec, 1);
    else if (model == "lorentzian2")
        fit = natsim::lorentzian_peak_fit(spec, 2);
    else if (model == "mollow")
        fit = natsim::mollow_fit(spec, natsim::MollowMode::full_mollow);
    else if (model == "three_lorentzians")
        fit = natsim::mollow_fit(spec, natsim::MollowMode::three_lorentzians);
    else
        throw natsim::ValidationError(
            "model must be one of: lorentzian1, lorentzian2, mollow, three_lorentzians");

    nlohmann::json out;
    out["model"] = model;
    out["converged"] = fit.converged;
    out["residual_norm"] = fit.residual_norm;
    nlohmann::json params = nlohmann::json::object();
    for (const auto& p : fit.parameters)
        params[p.name] = nlohmann::json{{"value", p.value}, {"std_error", p.std_error}};
    out["parameters"] = params;
    std::cout << out.dump(2) << '\n';
    return fit.converged ? kExitOk : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"natsim - noise-assisted transport simulator for a three-qubit circuit"};
    app.require_subcommand(1);

    std::string config, outdir = "out", spec_path, out_path, spectrum_path, model;
    std::size_t n_samples = 1 << 20;
    std::uint64_t seed = 1;

    auto* run = app.add_subcommand("run", "run a scenario config and write the result bundle");
    run->add_option("config", config, "scenario JSON file")->required();
    run->add_option("-o,--out", outdir, "output directory");

    auto* cmp = app.add_subcommand("compare", "cross-check lindblad vs rate_eq on a scenario");
    cmp->add_option("config", config, "scenario JSON file")->required();
    cmp->add_option("-o,--out", outdir, "output directory");

    auto* gen = app.add_subcommand("noise-gen", "synthesize a noise series from a spec");
    gen->add_option("spec", spec_path, "noise spec JSON file")->required();
    gen->add_option("out", out_path, "output file (.csv or .bin)")->required();
    gen->add_option("-n,--samples", n_samples, "number of samples");
    gen->add_option("-s,--seed", seed, "RNG seed");

    auto* fit = app.add_subcommand("fit", "fit a spectrum CSV with a lineshape model");
    fit->add_option("spectrum", spectrum_path, "CSV with freq_GHz,psd columns")->required();
    fit->add_option("model", model, "lorentzian1|lorentzian2|mollow|three_lorentzians")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config, outdir);
        if (cmp->parsed()) return cmd_compare(config, outdir);
        if (gen->parsed()) return cmd_noise_gen(spec_path, out_path, n_samples, seed);
        if (fit->parsed()) return cmd_fit(spectrum_path, model);
    } catch (const natsim::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitOk;
}
