#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <stdexcept>

namespace natsim::detail {

/// Thrown when the adaptive controller cannot make progress; carries the last
/// time reached.
struct OdeStepUnderflow : std::runtime_error {
    double t_reached;
    explicit OdeStepUnderflow(double t)
        : std::runtime_error("ODE step size underflow at t = " + std::to_string(t)),
          t_reached(t) {}
};

/// Dormand-Prince 5(4) with step control for linear-in-state right-hand sides.
/// rhs(x, dxdt) must evaluate dxdt = f(x) (time-independent generators here).
class Rk45 {
public:
    double rel_tol = 1e-9;
    double abs_tol = 1e-11;
    double max_step = 1e30;

    using Rhs = std::function<void(const Eigen::VectorXcd&, Eigen::VectorXcd&)>;

    /// Advances x from t0 to t1 in place.
    void integrate(const Rhs& rhs, Eigen::VectorXcd& x, double t0, double t1) {
        if (t1 <= t0) return;
        double t = t0;
        double h = std::min({t1 - t0, max_step, suggested_});
        Eigen::VectorXcd k1(x.size()), k2(x.size()), k3(x.size()), k4(x.size()),
            k5(x.size()), k6(x.size()), k7(x.size()), xt(x.size()), x5(x.size());
        rhs(x, k1);
        while (t < t1) {
            h = std::min(h, t1 - t);
            if (h < 1e-14 * std::max(1.0, std::abs(t))) throw OdeStepUnderflow(t);

            xt = x + h * (a21 * k1);
            rhs(xt, k2);
            xt = x + h * (a31 * k1 + a32 * k2);
            rhs(xt, k3);
            xt = x + h * (a41 * k1 + a42 * k2 + a43 * k3);
            rhs(xt, k4);
            xt = x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
            rhs(xt, k5);
            xt = x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
            rhs(xt, k6);
            x5 = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            rhs(x5, k7);

            // embedded 4th-order difference
            double err = 0.0, scale_norm = 0.0;
            for (Eigen::Index i = 0; i < x.size(); ++i) {
                const std::complex<double> e =
                    h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                         e7 * k7[i]);
                const double sc = abs_tol + rel_tol * std::max(std::abs(x[i]), std::abs(x5[i]));
                err += std::norm(e / sc);
                scale_norm += 1.0;
            }
            err = std::sqrt(err / scale_norm);

            if (err <= 1.0) {
                t += h;
                x.swap(x5);
                k1.swap(k7);  // FSAL
            }
            const double fac = std::clamp(0.9 * std::pow(err > 0 ? err : 1e-10, -0.2), 0.2, 5.0);
            h *= fac;
            suggested_ = h;
        }
    }

private:
    double suggested_ = 1e-4;

    static constexpr double a21 = 1.0 / 5.0;
    static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
    static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
    static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                            a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
    static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                            a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
    static constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                            b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
    // y5 - y4 coefficients
    static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                            e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
};

}  // namespace natsim::detail
