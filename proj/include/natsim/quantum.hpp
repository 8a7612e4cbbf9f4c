#pragma once

#include <Eigen/Dense>
#include <complex>

namespace natsim {

using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using cplx = std::complex<double>;

inline constexpr double two_pi = 6.283185307179586476925286766559;

/// Basis an operator (or Hamiltonian) is expressed in. Everything is stored
/// as a matrix over the lab product basis; the tag records whether collective
/// (bright/dark) structure was used to build it.
enum class Basis { lab, bright_dark };

/// Composite Hilbert space of `qubit_count` two-level systems and one
/// harmonic mode truncated at `resonator_dim` Fock states.
///
/// Ordering: qubit 1 is the slowest tensor factor, the resonator the fastest.
/// Qubit basis: index 0 = ground, 1 = excited.
struct HilbertSpace {
    int qubit_count = 3;
    int resonator_dim = 3;

    HilbertSpace() = default;
    HilbertSpace(int nq, int nr);

    int dim() const { return (1 << qubit_count) * resonator_dim; }

    /// Index of the product basis state with excited-qubit set `excited`
    /// (bit j set = qubit j+1 excited) and resonator Fock level n.
    int basis_index(unsigned excited_bits, int fock) const;

    Mat identity() const;

    /// identity x ... x local_op x ... x identity (resonator identity appended).
    /// `site` is 1-based.
    Mat embed_qubit_operator(const Mat& local_op, int site) const;

    /// Embed an operator acting on the resonator factor alone.
    Mat embed_resonator_operator(const Mat& local_op) const;

    Mat sigma_plus(int site) const;
    Mat sigma_minus(int site) const;
    Mat sigma_x(int site) const;
    Mat sigma_y(int site) const;
    Mat sigma_z(int site) const;

    /// Annihilation operator of the resonator mode, sqrt(n) sub-diagonal.
    Mat annihilation() const;
    Mat number_operator() const;

    /// Ground state |g...g,0> as a density matrix.
    Mat ground_state() const;
};

struct BrightDarkOps {
    Mat sigma_b_plus, sigma_b_minus;
    Mat sigma_d_plus, sigma_d_minus;
};

/// sigma_b^± = (sigma_1^± + sigma_2^±)/sqrt(2), sigma_d^± = (sigma_1^± - sigma_2^±)/sqrt(2).
BrightDarkOps bright_dark_operators(const HilbertSpace& space);

/// Frobenius check of H = H^dagger, relative to ||H||.
bool is_hermitian(const Mat& m, double tol = 1e-12);

}  // namespace natsim
