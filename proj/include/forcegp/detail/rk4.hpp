#pragma once

#include <Eigen/Dense>

namespace forcegp::detail {

/// One classical Runge-Kutta step over a uniform sample interval.
///
/// The derivative callback is invoked with a substage index instead of a
/// time value: 0 = interval start, 1 = midpoint (used twice), 2 = interval
/// end. Callers supply forcing terms per substage, which keeps different
/// integrators bit-for-bit identical on identical dynamics.
template <class Deriv>
void rk4_step(Deriv&& deriv, double h, Eigen::VectorXd& state) {
    const Eigen::VectorXd k1 = deriv(0, state);
    const Eigen::VectorXd k2 = deriv(1, Eigen::VectorXd(state + (0.5 * h) * k1));
    const Eigen::VectorXd k3 = deriv(1, Eigen::VectorXd(state + (0.5 * h) * k2));
    const Eigen::VectorXd k4 = deriv(2, Eigen::VectorXd(state + h * k3));
    state += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Acceleration of a linear modal oscillator, used by every integrator so
/// that reduced cases agree exactly.
inline double modal_acceleration(double force, double damping, double stiffness,
                                 double mass, double u, double v) {
    return (force - damping * v - stiffness * u) / mass;
}

/// Half-step value of a uniformly sampled series on interval [i, i+1].
/// Cubic interpolation in the interior keeps the RK4 march fourth order;
/// the end intervals fall back to quadratic (or the average for n = 2).
inline double midpoint_sample(const Eigen::VectorXd& v, Eigen::Index i) {
    const Eigen::Index n = v.size();
    if (n >= 4 && i >= 1 && i + 2 < n)
        return (-v[i - 1] + 9.0 * v[i] + 9.0 * v[i + 1] - v[i + 2]) / 16.0;
    if (n >= 3 && i + 2 < n) return (3.0 * v[i] + 6.0 * v[i + 1] - v[i + 2]) / 8.0;
    if (n >= 3 && i >= 1) return (-v[i - 1] + 6.0 * v[i] + 3.0 * v[i + 1]) / 8.0;
    return 0.5 * (v[i] + v[i + 1]);
}

}  // namespace forcegp::detail
