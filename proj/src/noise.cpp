#include "natsim/noise.hpp"

#include "detail/fft.hpp"
#include "detail/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace natsim {

namespace {
constexpr double pi = 3.14159265358979323846;
}

NoiseSpec NoiseSpec::white(double a_w, double cutoff, double width) {
    NoiseSpec s;
    s.kind = NoiseKind::white;
    s.a_w_mhz = a_w;
    s.cutoff_mhz = cutoff;
    s.cutoff_width_mhz = width;
    return s;
}

NoiseSpec NoiseSpec::lorentzian(double a_l, double center, double fwhm) {
    NoiseSpec s;
    s.kind = NoiseKind::lorentzian;
    s.a_l_mhz = a_l;
    s.center_mhz = center;
    s.fwhm_mhz = fwhm;
    return s;
}

NoiseSpec NoiseSpec::lorentzian_from_xi0(double xi0, double center, double fwhm) {
    if (fwhm <= 0.0)
        throw std::invalid_argument("lorentzian_from_xi0: fwhm must be > 0");
    return lorentzian(2.0 * xi0 * xi0 / fwhm, center, fwhm);
}

NoiseSpec NoiseSpec::coherent_tone(double amp, double freq) {
    NoiseSpec s;
    s.kind = NoiseKind::coherent_tone;
    s.tone_amp_mhz = amp;
    s.tone_freq_mhz = freq;
    return s;
}

double NoiseSpec::wiener_xi0_mhz() const {
    if (kind != NoiseKind::lorentzian)
        throw std::invalid_argument("wiener_xi0_mhz: lorentzian spec required");
    return std::sqrt(a_l_mhz * fwhm_mhz / 2.0);
}

double highest_content_mhz(const NoiseSpec& s) {
    switch (s.kind) {
        case NoiseKind::white: return s.cutoff_mhz + 5.0 * s.cutoff_width_mhz;
        case NoiseKind::lorentzian: return s.center_mhz + 5.0 * s.fwhm_mhz;
        case NoiseKind::coherent_tone: return s.tone_freq_mhz;
    }
    return 0.0;
}

void NoiseSpec::validate() const {
    auto nonneg = [](double v, const char* name) {
        if (v < 0.0 || !std::isfinite(v))
            throw std::invalid_argument(std::string("NoiseSpec: ") + name + " must be >= 0");
    };
    nonneg(a_w_mhz, "a_w_mhz");
    nonneg(cutoff_mhz, "cutoff_mhz");
    nonneg(cutoff_width_mhz, "cutoff_width_mhz");
    nonneg(a_l_mhz, "a_l_mhz");
    nonneg(center_mhz, "center_mhz");
    nonneg(fwhm_mhz, "fwhm_mhz");
    nonneg(tone_freq_mhz, "tone_freq_mhz");
    if (sample_rate_per_us <= 2.0 * highest_content_mhz(*this))
        throw std::invalid_argument("NoiseSpec: sample rate violates Nyquist margin");
}

double NoiseSeries::rms() const {
    if (samples.empty()) return 0.0;
    double acc = 0.0;
    for (double v : samples) acc += v * v;
    return std::sqrt(acc / double(samples.size()));
}

double NoiseSeries::mean() const {
    if (samples.empty()) return 0.0;
    return std::accumulate(samples.begin(), samples.end(), 0.0) / double(samples.size());
}

double target_psd(const NoiseSpec& spec, double nu_mhz) {
    if (nu_mhz < 0.0) throw std::invalid_argument("target_psd: nu must be >= 0");
    switch (spec.kind) {
        case NoiseKind::white:
            return spec.a_w_mhz /
                   (1.0 + std::exp((nu_mhz - spec.cutoff_mhz) / spec.cutoff_width_mhz));
        case NoiseKind::lorentzian: {
            const double half = spec.fwhm_mhz / 2.0;
            const double d = (nu_mhz - spec.center_mhz) / half;
            return spec.a_l_mhz / (1.0 + d * d);
        }
        case NoiseKind::coherent_tone:
            throw std::invalid_argument("target_psd: coherent tone has no density");
    }
    return 0.0;
}

NoiseSeries synthesize_fir(const NoiseSpec& spec, std::size_t n_samples, std::uint64_t seed,
                           std::size_t fir_taps) {
    spec.validate();
    if (spec.kind == NoiseKind::coherent_tone) {
        NoiseSeries out;
        out.dt_us = 1.0 / spec.sample_rate_per_us;
        out.spec = spec;
        out.samples.resize(n_samples);
        for (std::size_t i = 0; i < n_samples; ++i)
            out.samples[i] =
                spec.tone_amp_mhz * std::cos(two_pi * spec.tone_freq_mhz * double(i) * out.dt_us);
        return out;
    }
    if ((fir_taps & (fir_taps - 1)) != 0)
        throw std::invalid_argument("synthesize_fir: fir_taps must be a power of two");
    if (n_samples < 8 * fir_taps)
        throw std::invalid_argument("synthesize_fir: need n_samples >= 8 * fir_taps");

    const double fs = spec.sample_rate_per_us;
    const double dt = 1.0 / fs;

    // frequency-sampling design: |H(nu)|^2 = P_target(nu) / P_in,
    // P_in = 1/fs for a unit-variance input, P_target = S(nu)/2pi (two-sided).
    std::vector<cplx> h(fir_taps);
    for (std::size_t k = 0; k < fir_taps; ++k) {
        double nu = double(k) / double(fir_taps) * fs;
        if (nu > fs / 2.0) nu = fs - nu;  // two-sided symmetry
        const double p_target = target_psd(spec, nu) / two_pi;
        h[k] = std::sqrt(p_target * fs);
    }
    detail::fft_pow2(h, true);  // zero-phase impulse response (real, symmetric)
    // rotate to causal linear phase and taper with a Hamming window
    std::vector<double> taps(fir_taps);
    for (std::size_t i = 0; i < fir_taps; ++i) {
        const double w =
            0.54 - 0.46 * std::cos(two_pi * double(i) / double(fir_taps - 1));
        taps[i] = h[(i + fir_taps / 2) % fir_taps].real() * w;
    }

    // white Gaussian input, filtered by overlap-free FFT convolution
    detail::GaussianRng rng(detail::splitmix64(seed ^ 0x6e6f697365ULL));
    const std::size_t ntot = n_samples + fir_taps;
    std::vector<double> x(ntot);
    for (auto& v : x) v = rng();

    const std::size_t nfft = detail::next_pow2(ntot + fir_taps);
    std::vector<cplx> fx(nfft, cplx(0, 0)), fh(nfft, cplx(0, 0));
    for (std::size_t i = 0; i < ntot; ++i) fx[i] = x[i];
    for (std::size_t i = 0; i < fir_taps; ++i) fh[i] = taps[i];
    detail::fft_pow2(fx, false);
    detail::fft_pow2(fh, false);
    for (std::size_t i = 0; i < nfft; ++i) fx[i] *= fh[i];
    detail::fft_pow2(fx, true);

    NoiseSeries out;
    out.dt_us = dt;
    out.spec = spec;
    out.samples.resize(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i)
        out.samples[i] = fx[i + fir_taps].real();  // drop the filter transient
    return out;
}

NoiseSeries wiener_phase_process(double xi0_mhz, double nu_l_mhz, double fwhm_mhz,
                                 double dt_us, std::size_t n, std::uint64_t seed) {
    if (nu_l_mhz > 0.0 && dt_us * nu_l_mhz > 0.08)
        throw std::invalid_argument("wiener_phase_process: dt too coarse for nu_l");
    if (fwhm_mhz > 0.0 && dt_us * fwhm_mhz > 0.08)
        throw std::invalid_argument("wiener_phase_process: dt too coarse for fwhm");

    detail::GaussianRng rng(detail::splitmix64(seed ^ 0x7769656e6572ULL));
    const double phi0 = rng.uniform() * two_pi;
    const double step_sigma = std::sqrt(two_pi * fwhm_mhz * dt_us);

    NoiseSeries out;
    out.dt_us = dt_us;
    out.spec = NoiseSpec::lorentzian(fwhm_mhz > 0 ? xi0_mhz * xi0_mhz / fwhm_mhz : 0.0,
                                     nu_l_mhz, fwhm_mhz);
    out.spec.sample_rate_per_us = 1.0 / dt_us;
    out.samples.resize(n);
    double phi = phi0;
    for (std::size_t i = 0; i < n; ++i) {
        out.samples[i] = xi0_mhz * std::cos(two_pi * nu_l_mhz * double(i) * dt_us + phi);
        if (fwhm_mhz > 0.0) phi += step_sigma * rng();
    }
    return out;
}

SpectrumResult estimate_psd(const NoiseSeries& series, std::size_t segment_length,
                            WelchWindow window) {
    const std::size_t n = series.samples.size();
    if ((segment_length & (segment_length - 1)) != 0 || segment_length < 8)
        throw std::invalid_argument("estimate_psd: segment_length must be a power of two >= 8");
    if (segment_length > n / 4)
        throw std::invalid_argument("estimate_psd: segment too long (need <= n/4)");

    std::vector<double> w(segment_length);
    for (std::size_t i = 0; i < segment_length; ++i) {
        const double u = two_pi * double(i) / double(segment_length - 1);
        switch (window) {
            case WelchWindow::rectangular: w[i] = 1.0; break;
            case WelchWindow::hann: w[i] = 0.5 * (1.0 - std::cos(u)); break;
            case WelchWindow::blackman:
                w[i] = 0.42 - 0.5 * std::cos(u) + 0.08 * std::cos(2.0 * u);
                break;
        }
    }
    double wpow = 0.0;
    for (double v : w) wpow += v * v;
    wpow /= double(segment_length);

    const std::size_t hop = segment_length / 2;
    std::vector<double> acc(segment_length / 2 + 1, 0.0);
    std::size_t nseg = 0;
    std::vector<cplx> buf(segment_length);
    for (std::size_t start = 0; start + segment_length <= n; start += hop, ++nseg) {
        for (std::size_t i = 0; i < segment_length; ++i)
            buf[i] = series.samples[start + i] * w[i];
        detail::fft_pow2(buf, false);
        for (std::size_t k = 0; k <= segment_length / 2; ++k)
            acc[k] += std::norm(buf[k]);
    }

    const double dt = series.dt_us;
    SpectrumResult out;
    out.port = Port::flux_line;
    out.freq_ghz.resize(acc.size());
    out.psd.resize(acc.size());
    for (std::size_t k = 0; k < acc.size(); ++k) {
        out.freq_ghz[k] = double(k) / (double(segment_length) * dt) * 1e-3;
        // two-sided periodogram * 2pi (convention in the header)
        out.psd[k] = two_pi * acc[k] * dt / (double(nseg) * double(segment_length) * wpow);
    }
    return out;
}

double noise_power_mhz2(const SpectrumResult& psd) {
    double acc = 0.0;
    for (std::size_t i = 1; i < psd.freq_ghz.size(); ++i)
        acc += 0.5 * (psd.psd[i] + psd.psd[i - 1]) * (psd.freq_ghz[i] - psd.freq_ghz[i - 1]);
    return acc * 1e3 / pi;  // GHz grid -> MHz, two-sided fold
}

DephasingRate dephasing_rate_markov(const NoiseSpec& spec) {
    DephasingRate out;
    switch (spec.kind) {
        case NoiseKind::white:
            out.rate_mhz = 2.0 * spec.a_w_mhz;
            out.markov_valid = true;
            return out;
        case NoiseKind::lorentzian: {
            const double half = spec.fwhm_mhz / 2.0;
            out.rate_mhz = 2.0 * spec.a_l_mhz * half * half /
                           (spec.center_mhz * spec.center_mhz + half * half);
            out.markov_valid = spec.fwhm_mhz >= 10.0 * out.rate_mhz;
            return out;
        }
        case NoiseKind::coherent_tone:
            throw std::invalid_argument("dephasing_rate_markov: undefined for coherent tone");
    }
    return out;
}

namespace {

DecayFitResult fit_exponential_decay(const std::vector<double>& t, const std::vector<double>& sx,
                                     double floor = 0.2) {
    std::size_t end = sx.size();
    for (std::size_t i = 0; i < sx.size(); ++i) {
        if (sx[i] < floor) { end = i; break; }
    }
    end = std::max<std::size_t>(end, 8);
    // least squares on log(sx) over [0, end)
    double st = 0, sy = 0, stt = 0, sty = 0;
    for (std::size_t i = 0; i < end; ++i) {
        const double y = std::log(std::max(sx[i], 1e-12));
        st += t[i]; sy += y; stt += t[i] * t[i]; sty += t[i] * y;
    }
    const double m = double(end);
    const double slope = (m * sty - st * sy) / (m * stt - st * st);
    DecayFitResult out;
    out.rate_mhz = -slope / two_pi;
    double rss = 0.0;
    for (std::size_t i = 0; i < end; ++i) {
        const double model = std::exp(slope * t[i] + (sy - slope * st) / m);
        rss += (sx[i] - model) * (sx[i] - model);
    }
    out.rms_residual = std::sqrt(rss / m);
    out.converged = out.rms_residual < 0.1;
    return out;
}

}  // namespace

DecayFitResult dephasing_rate_finite_cutoff(const NoiseSpec& white_spec,
                                            const FiniteCutoffOptions& opts) {
    if (white_spec.kind != NoiseKind::white)
        throw std::invalid_argument("dephasing_rate_finite_cutoff: white spec required");
    if (white_spec.a_w_mhz == 0.0) return {0.0, 0.0, true};

    const double gpred = 2.0 * white_spec.a_w_mhz;
    const double horizon = std::clamp(1.5 / gpred, 0.02, 4.0);
    const double dt = 1.0 / white_spec.sample_rate_per_us;
    const std::size_t nsamp = std::max<std::size_t>(std::size_t(horizon / dt), 64);

    std::vector<double> acc(nsamp, 0.0);
    for (int j = 0; j < opts.n_traj; ++j) {
        const auto xi = synthesize_fir(white_spec, nsamp, detail::derive_seed(opts.seed, j));
        double theta = 0.0;
        for (std::size_t i = 0; i < nsamp; ++i) {
            theta += 2.0 * two_pi * xi.samples[i] * dt;
            acc[i] += std::cos(theta);
        }
    }
    std::vector<double> t(nsamp), sx(nsamp);
    for (std::size_t i = 0; i < nsamp; ++i) {
        t[i] = double(i + 1) * dt;
        sx[i] = acc[i] / double(opts.n_traj);
    }
    return fit_exponential_decay(t, sx);
}

double effective_coupling_mhz(const NoiseSeries& series) { return 2.0 * series.rms(); }

NoiseSeries CalibrationMap::frequency_series(const std::vector<double>& flux_mwb,
                                             double dt_us) const {
    NoiseSeries out;
    out.dt_us = dt_us;
    out.samples.resize(flux_mwb.size());
    for (std::size_t i = 0; i < flux_mwb.size(); ++i)
        out.samples[i] = 0.5 * flux_to_freq_slope_mhz_per_mwb * flux_mwb[i];
    return out;
}

void write_noise_csv(const NoiseSeries& series, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_noise_csv: cannot open " + path);
    f << "t_us,xi_MHz\n";
    f.precision(12);
    for (std::size_t i = 0; i < series.samples.size(); ++i)
        f << double(i) * series.dt_us << ',' << series.samples[i] << '\n';
}

NoiseSeries read_noise_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_noise_csv: cannot open " + path);
    std::string line;
    std::getline(f, line);  // header
    NoiseSeries out;
    double t0 = 0.0, t1 = 0.0;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("read_noise_csv: malformed line: " + line);
        const double t = std::stod(line.substr(0, comma));
        out.samples.push_back(std::stod(line.substr(comma + 1)));
        if (out.samples.size() == 1) t0 = t;
        if (out.samples.size() == 2) t1 = t;
    }
    out.dt_us = out.samples.size() > 1 ? t1 - t0 : 0.0;
    return out;
}

namespace {
constexpr char kNoiseMagic[8] = {'N', 'A', 'T', 'S', 'N', 'O', 'I', '1'};
}

void write_noise_bin(const NoiseSeries& series, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_noise_bin: cannot open " + path);
    f.write(kNoiseMagic, 8);
    const std::uint64_t n = series.samples.size();
    f.write(reinterpret_cast<const char*>(&n), 8);
    f.write(reinterpret_cast<const char*>(&series.dt_us), 8);
    f.write(reinterpret_cast<const char*>(series.samples.data()), std::streamsize(8 * n));
}

NoiseSeries read_noise_bin(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_noise_bin: cannot open " + path);
    char magic[8];
    f.read(magic, 8);
    if (std::memcmp(magic, kNoiseMagic, 8) != 0)
        throw std::runtime_error("read_noise_bin: bad magic in " + path);
    std::uint64_t n = 0;
    NoiseSeries out;
    f.read(reinterpret_cast<char*>(&n), 8);
    f.read(reinterpret_cast<char*>(&out.dt_us), 8);
    out.samples.resize(n);
    f.read(reinterpret_cast<char*>(out.samples.data()), std::streamsize(8 * n));
    if (!f) throw std::runtime_error("read_noise_bin: truncated file " + path);
    return out;
}

}  // namespace natsim
