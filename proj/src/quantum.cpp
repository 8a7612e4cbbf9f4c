#include "natsim/quantum.hpp"

#include <stdexcept>
#include <string>

namespace natsim {

namespace {

Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Mat pauli(char which) {
    Mat m = Mat::Zero(2, 2);
    switch (which) {
        case '+': m(1, 0) = 1.0; break;                      // |e><g|
        case '-': m(0, 1) = 1.0; break;
        case 'x': m(0, 1) = 1.0; m(1, 0) = 1.0; break;
        case 'y': m(0, 1) = cplx(0, -1); m(1, 0) = cplx(0, 1); break;
        case 'z': m(0, 0) = -1.0; m(1, 1) = 1.0; break;      // ground -> -1
    }
    return m;
}

}  // namespace

HilbertSpace::HilbertSpace(int nq, int nr) : qubit_count(nq), resonator_dim(nr) {
    if (nq < 1) throw std::invalid_argument("HilbertSpace: qubit_count must be >= 1");
    if (nr < 2) throw std::invalid_argument("HilbertSpace: resonator_dim must be >= 2");
}

int HilbertSpace::basis_index(unsigned excited_bits, int fock) const {
    int q = 0;
    for (int j = 0; j < qubit_count; ++j) {
        q = q * 2 + ((excited_bits >> j) & 1u);
    }
    return q * resonator_dim + fock;
}

Mat HilbertSpace::identity() const { return Mat::Identity(dim(), dim()); }

Mat HilbertSpace::embed_qubit_operator(const Mat& local_op, int site) const {
    if (local_op.rows() != 2 || local_op.cols() != 2)
        throw std::invalid_argument("embed_qubit_operator: local_op must be 2x2");
    if (site < 1 || site > qubit_count)
        throw std::invalid_argument("embed_qubit_operator: site " + std::to_string(site) +
                                    " outside 1.." + std::to_string(qubit_count));
    Mat m = Mat::Identity(1, 1);
    for (int j = 1; j <= qubit_count; ++j) {
        m = kron(m, j == site ? local_op : Mat(Mat::Identity(2, 2)));
    }
    return kron(m, Mat(Mat::Identity(resonator_dim, resonator_dim)));
}

Mat HilbertSpace::embed_resonator_operator(const Mat& local_op) const {
    if (local_op.rows() != resonator_dim || local_op.cols() != resonator_dim)
        throw std::invalid_argument("embed_resonator_operator: dimension mismatch");
    Mat m = Mat::Identity(1 << qubit_count, 1 << qubit_count);
    return kron(m, local_op);
}

Mat HilbertSpace::sigma_plus(int site) const { return embed_qubit_operator(pauli('+'), site); }
Mat HilbertSpace::sigma_minus(int site) const { return embed_qubit_operator(pauli('-'), site); }
Mat HilbertSpace::sigma_x(int site) const { return embed_qubit_operator(pauli('x'), site); }
Mat HilbertSpace::sigma_y(int site) const { return embed_qubit_operator(pauli('y'), site); }
Mat HilbertSpace::sigma_z(int site) const { return embed_qubit_operator(pauli('z'), site); }

Mat HilbertSpace::annihilation() const {
    Mat a = Mat::Zero(resonator_dim, resonator_dim);
    for (int n = 1; n < resonator_dim; ++n) a(n - 1, n) = std::sqrt(double(n));
    return embed_resonator_operator(a);
}

Mat HilbertSpace::number_operator() const {
    Mat n = Mat::Zero(resonator_dim, resonator_dim);
    for (int k = 0; k < resonator_dim; ++k) n(k, k) = double(k);
    return embed_resonator_operator(n);
}

Mat HilbertSpace::ground_state() const {
    Mat rho = Mat::Zero(dim(), dim());
    rho(basis_index(0u, 0), basis_index(0u, 0)) = 1.0;
    return rho;
}

BrightDarkOps bright_dark_operators(const HilbertSpace& space) {
    if (space.qubit_count < 2)
        throw std::invalid_argument("bright_dark_operators: needs at least two qubits");
    const double s = 1.0 / std::sqrt(2.0);
    BrightDarkOps o;
    o.sigma_b_plus = s * (space.sigma_plus(1) + space.sigma_plus(2));
    o.sigma_b_minus = s * (space.sigma_minus(1) + space.sigma_minus(2));
    o.sigma_d_plus = s * (space.sigma_plus(1) - space.sigma_plus(2));
    o.sigma_d_minus = s * (space.sigma_minus(1) - space.sigma_minus(2));
    return o;
}

bool is_hermitian(const Mat& m, double tol) {
    double scale = m.norm();
    if (scale == 0.0) return true;
    return (m - m.adjoint()).norm() <= tol * scale;
}

}  // namespace natsim
