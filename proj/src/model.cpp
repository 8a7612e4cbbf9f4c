#include "natsim/model.hpp"

#include <stdexcept>

namespace natsim {

void SystemParams::validate() const {
    auto nonneg = [](double v, const char* name) {
        if (v < 0.0 || !std::isfinite(v))
            throw std::invalid_argument(std::string("SystemParams: ") + name + " must be >= 0");
    };
    nonneg(gamma_b_mhz, "gamma_b_mhz");
    nonneg(gamma_d_mhz, "gamma_d_mhz");
    nonneg(kappa_mhz, "kappa_mhz");
    nonneg(gamma_phi_mhz, "gamma_phi_mhz");
    nonneg(n_th, "n_th");
    nonneg(omega_rabi_mhz, "omega_rabi_mhz");
}

Vec Superoperator::vectorize(const Mat& rho) {
    return Eigen::Map<const Vec>(rho.data(), rho.size());  // Eigen is column-major
}

Mat Superoperator::unvectorize(const Vec& v, int n) {
    return Eigen::Map<const Mat>(v.data(), n, n);
}

Mat build_hamiltonian(const SystemParams& p, const HilbertSpace& space) {
    p.validate();
    const double ghz_to_mhz = 1e3;
    const double win = p.omega_in_ghz * ghz_to_mhz;
    const double w[3] = {p.omega1_ghz * ghz_to_mhz, p.omega2_ghz * ghz_to_mhz,
                         p.omega3_ghz * ghz_to_mhz};

    Mat H = Mat::Zero(space.dim(), space.dim());
    for (int j = 1; j <= 3; ++j) H += 0.5 * (w[j - 1] - win) * space.sigma_z(j);

    auto exchange = [&](int k, int j, double rate) {
        H += rate * (space.sigma_plus(k) * space.sigma_minus(j) +
                     space.sigma_plus(j) * space.sigma_minus(k));
    };
    exchange(1, 2, p.j12_mhz);
    exchange(2, 3, p.j23_mhz);
    exchange(1, 3, p.j13_mhz);

    const Mat a = space.annihilation();
    H += (p.omega_r_ghz * ghz_to_mhz - win) * (a.adjoint() * a);
    H += p.g3_mhz * (a.adjoint() * space.sigma_minus(3) + space.sigma_plus(3) * a);

    const double per_qubit_drive = p.omega_rabi_mhz / std::sqrt(2.0);
    for (int j = 1; j <= 2; ++j)
        H += 0.5 * per_qubit_drive * (space.sigma_plus(j) + space.sigma_minus(j));
    return H;
}

std::vector<JumpChannel> collapse_channels(const SystemParams& p, const HilbertSpace& space) {
    p.validate();
    const auto bd = bright_dark_operators(space);
    std::vector<JumpChannel> ch;
    ch.push_back({p.gamma_b_mhz * (1.0 + p.n_th), bd.sigma_b_minus});
    ch.push_back({p.gamma_d_mhz * (1.0 + p.n_th), bd.sigma_d_minus});
    if (p.n_th > 0.0) {
        ch.push_back({p.gamma_b_mhz * p.n_th, bd.sigma_b_plus});
        ch.push_back({p.gamma_d_mhz * p.n_th, bd.sigma_d_plus});
    }
    // sigma_2^+ sigma_2^- - sigma_2^- sigma_2^+ = sigma_2^z
    if (p.gamma_phi_mhz > 0.0) ch.push_back({0.5 * p.gamma_phi_mhz, space.sigma_z(2)});
    ch.push_back({p.kappa_mhz, space.annihilation()});
    return ch;
}

namespace {

Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

}  // namespace

Superoperator liouvillian_from_parts(const Mat& H, const std::vector<JumpChannel>& channels) {
    const Eigen::Index n = H.rows();
    const Mat eye = Mat::Identity(n, n);
    // column stacking: vec(A rho B) = (B^T kron A) vec(rho)
    Mat L = cplx(0, -two_pi) * (kron(eye, H) - kron(H.transpose(), eye));
    for (const auto& [rate, c] : channels) {
        if (rate == 0.0) continue;
        const Mat cdc = c.adjoint() * c;
        L += two_pi * rate *
             (kron(c.conjugate(), c) - 0.5 * kron(eye, cdc) - 0.5 * kron(cdc.transpose(), eye));
    }
    Superoperator s;
    s.hilbert_dim = int(n);
    s.matrix = std::move(L);
    return s;
}

Superoperator build_liouvillian(const SystemParams& params, const Mat& hamiltonian,
                                const HilbertSpace& space) {
    if (!is_hermitian(hamiltonian))
        throw std::invalid_argument("build_liouvillian: Hamiltonian is not Hermitian");
    return liouvillian_from_parts(hamiltonian, collapse_channels(params, space));
}

Superoperator commutator_superoperator(const Mat& op) {
    const Eigen::Index n = op.rows();
    const Mat eye = Mat::Identity(n, n);
    Superoperator s;
    s.hilbert_dim = int(n);
    s.matrix = cplx(0, -two_pi) * (kron(eye, op) - kron(op.transpose(), eye));
    return s;
}

}  // namespace natsim
