#pragma once

// Independent oracles used by the tests. These deliberately avoid the library
// implementations they check: tensor products are built by explicit index
// arithmetic, transforms by the O(N^2) definition, optima by grid refinement.

#include "natsim/quantum.hpp"

#include <functional>
#include <random>
#include <vector>

namespace oracle {

using natsim::cplx;
using natsim::Mat;

/// Tensor embedding by direct basis-index arithmetic over factors
/// [2, 2, ..., 2, nr]; op acts on factor `which` (0-based).
inline Mat embed_by_index(const std::vector<Mat>& factors, const Mat& op, int which) {
    std::vector<Eigen::Index> dims;
    for (const auto& f : factors) dims.push_back(f.rows());
    Eigen::Index total = 1;
    for (auto d : dims) total *= d;
    Mat out = Mat::Zero(total, total);
    for (Eigen::Index row = 0; row < total; ++row) {
        for (Eigen::Index col = 0; col < total; ++col) {
            cplx amp(1.0, 0.0);
            Eigen::Index r = row, c = col;
            bool nonzero = true;
            for (int f = int(dims.size()) - 1; f >= 0; --f) {
                const Eigen::Index rf = r % dims[std::size_t(f)];
                const Eigen::Index cf = c % dims[std::size_t(f)];
                r /= dims[std::size_t(f)];
                c /= dims[std::size_t(f)];
                if (f == which) {
                    amp *= op(rf, cf);
                } else if (rf != cf) {
                    nonzero = false;
                    break;
                }
            }
            if (nonzero) out(row, col) = amp;
        }
    }
    return out;
}

/// O(N^2) two-sided discrete transform of a stationary correlation:
/// S(nu) = dtau * (2 Re sum_n c_n e^{-i 2pi nu n dtau} - Re c_0).
inline double dft_two_sided(const std::vector<cplx>& c, double dtau, double nu) {
    cplx acc(0, 0);
    for (std::size_t n = 0; n < c.size(); ++n) {
        const double ang = -natsim::two_pi * nu * double(n) * dtau;
        acc += c[n] * cplx(std::cos(ang), std::sin(ang));
    }
    return dtau * (2.0 * acc.real() - c[0].real());
}

/// argmax by coarse grid + local refinement, independent of golden section.
inline double grid_argmax(const std::function<double(double)>& f, double lo, double hi,
                          int rounds = 8, int pts = 41) {
    double a = lo, b = hi, best = lo;
    for (int r = 0; r < rounds; ++r) {
        double fbest = -1e300;
        for (int i = 0; i < pts; ++i) {
            const double x = a + (b - a) * double(i) / double(pts - 1);
            const double v = f(x);
            if (v > fbest) {
                fbest = v;
                best = x;
            }
        }
        const double span = (b - a) / double(pts - 1);
        a = std::max(lo, best - 2.0 * span);
        b = std::min(hi, best + 2.0 * span);
    }
    return best;
}

/// Deterministic random complex matrix with entries in the unit square.
inline Mat random_matrix(Eigen::Index n, unsigned seed) {
    std::mt19937 eng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Mat m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = cplx(u(eng), u(eng));
    return m;
}

/// Random density matrix (normalized A A^dagger).
inline Mat random_density(Eigen::Index n, unsigned seed) {
    const Mat a = random_matrix(n, seed);
    Mat rho = a * a.adjoint();
    rho /= rho.trace();
    return rho;
}

/// Central finite difference.
inline double derivative(const std::function<double(double)>& f, double x, double h = 1e-6) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace oracle
