#pragma once

#include <Eigen/Dense>
#include <functional>

namespace natsim::detail {

struct LmOptions {
    int max_iter = 300;
    double gradient_tol = 1e-10;
    double step_tol = 1e-12;
    double lambda0 = 1e-3;
};

struct LmOutcome {
    Eigen::VectorXd params;
    double residual_norm = 0.0;
    bool converged = false;
    Eigen::MatrixXd covariance;
};

/// Small dense Levenberg-Marquardt with a numeric Jacobian. Damping grows on
/// rejected steps and shrinks on accepted ones, so the residual decreases
/// monotonically.
inline LmOutcome levenberg_marquardt(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residual,
    Eigen::VectorXd p, const LmOptions& opt = {}) {
    using Eigen::MatrixXd;
    using Eigen::VectorXd;

    const auto jacobian = [&](const VectorXd& x, const VectorXd& r0) {
        MatrixXd J(r0.size(), x.size());
        for (Eigen::Index j = 0; j < x.size(); ++j) {
            const double h = 1e-7 * std::max(1.0, std::abs(x[j]));
            VectorXd xp = x;
            xp[j] += h;
            J.col(j) = (residual(xp) - r0) / h;
        }
        return J;
    };

    VectorXd r = residual(p);
    double cost = r.squaredNorm();
    double lambda = opt.lambda0;
    bool converged = false;

    for (int it = 0; it < opt.max_iter; ++it) {
        const MatrixXd J = jacobian(p, r);
        const MatrixXd JtJ = J.transpose() * J;
        const VectorXd g = J.transpose() * r;
        if (g.lpNorm<Eigen::Infinity>() < opt.gradient_tol * std::max(1.0, std::sqrt(cost))) {
            converged = true;
            break;
        }
        bool accepted = false;
        for (int k = 0; k < 12 && !accepted; ++k) {
            MatrixXd A = JtJ;
            A.diagonal() += lambda * JtJ.diagonal().cwiseMax(1e-12);
            const VectorXd step = A.ldlt().solve(-g);
            const VectorXd pn = p + step;
            const VectorXd rn = residual(pn);
            const double cn = rn.squaredNorm();
            if (cn < cost) {
                if (step.norm() < opt.step_tol * std::max(1.0, p.norm())) converged = true;
                p = pn;
                r = rn;
                cost = cn;
                lambda = std::max(lambda * 0.3, 1e-12);
                accepted = true;
            } else {
                lambda *= 2.5;
            }
        }
        if (!accepted) {
            // damping saturated: no direction decreases the residual, so we
            // are at a (local) least-squares minimum within float precision
            converged = true;
            break;
        }
        if (converged) break;
    }

    LmOutcome out;
    out.params = p;
    out.residual_norm = std::sqrt(cost);
    out.converged = converged;
    const MatrixXd J = jacobian(p, r);
    const Eigen::Index dof = std::max<Eigen::Index>(1, r.size() - p.size());
    const double s2 = cost / double(dof);
    out.covariance = s2 * (J.transpose() * J)
                              .completeOrthogonalDecomposition()
                              .pseudoInverse();
    return out;
}

}  // namespace natsim::detail
