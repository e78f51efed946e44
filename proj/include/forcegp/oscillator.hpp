#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "forcegp/detail/rk4.hpp"
#include "forcegp/errors.hpp"
#include "forcegp/kernels.hpp"

namespace forcegp {

/// Which response quantity a measurement or kernel argument refers to.
/// The enum value doubles as the time-derivative order of the displacement.
enum class ResponseType : int { disp = 0, vel = 1, acc = 2 };

inline constexpr ResponseType kResponseTypes[] = {ResponseType::disp, ResponseType::vel,
                                                  ResponseType::acc};

inline int deriv_order(ResponseType t) { return static_cast<int>(t); }

inline const char* to_string(ResponseType t) {
    switch (t) {
        case ResponseType::disp: return "disp";
        case ResponseType::vel: return "vel";
        case ResponseType::acc: return "acc";
    }
    return "?";
}

/// Modal mass-damper-spring system
///   m u'' + c u' + k_s u = F,  c = 2 m zeta omega_n,  k_s = m omega_n^2.
struct OscillatorParams {
    double mass;     ///< modal mass (kg)
    double zeta;     ///< damping ratio to critical, underdamped only
    double omega_n;  ///< circular natural frequency (rad/s)

    OscillatorParams(double mass_, double zeta_, double omega_n_)
        : mass(mass_), zeta(zeta_), omega_n(omega_n_) {
        if (!(std::isfinite(mass) && mass > 0.0))
            throw ConfigError("OscillatorParams: mass must be > 0");
        if (!(std::isfinite(omega_n) && omega_n > 0.0))
            throw ConfigError("OscillatorParams: omega_n must be > 0");
        if (!(std::isfinite(zeta) && zeta >= 0.0 && zeta < 1.0))
            throw ConfigError("OscillatorParams: zeta must lie in [0, 1)");
    }

    double damping_coeff() const { return 2.0 * mass * zeta * omega_n; }
    double stiffness() const { return mass * omega_n * omega_n; }
};

/// Sampled forcing time series on a strictly increasing grid.
struct ForcingSignal {
    Eigen::VectorXd times;   ///< s
    Eigen::VectorXd values;  ///< N

    ForcingSignal() = default;
    ForcingSignal(Eigen::VectorXd times_, Eigen::VectorXd values_)
        : times(std::move(times_)), values(std::move(values_)) {
        if (times.size() != values.size())
            throw ConfigError("ForcingSignal: times and values differ in length");
        for (Eigen::Index i = 1; i < times.size(); ++i)
            if (!(times[i] > times[i - 1]))
                throw ConfigError("ForcingSignal: times must be strictly increasing");
    }
};

/// Simulated displacement, velocity, and acceleration histories.
struct ResponseRecord {
    Eigen::VectorXd times;
    Eigen::VectorXd u;       ///< m
    Eigen::VectorXd u_dot;   ///< m/s
    Eigen::VectorXd u_ddot;  ///< m/s^2
};

/// Covariance between two response quantities: the (a, b) partial derivative
/// of the SE kernel, with orders given by the response types.
inline double response_kernel(const KernelParams& kp, ResponseType out, ResponseType out_prime,
                              double t, double t_prime) {
    return se_kernel_deriv(kp, DerivOrder(deriv_order(out), deriv_order(out_prime)), t, t_prime);
}

/// Hyperparameter gradient of response_kernel.
inline KernelGrad response_kernel_grad(const KernelParams& kp, ResponseType out,
                                       ResponseType out_prime, double t, double t_prime) {
    return se_kernel_grad(kp, DerivOrder(deriv_order(out), deriv_order(out_prime)), t, t_prime);
}

/// Cross-covariance between the latent force and a response quantity:
/// the oscillator operator applied to the first kernel argument,
///   k_F,resp(t, t') = m k^(2,b) + c k^(1,b) + k_s k^(0,b).
inline double force_response_kernel(const OscillatorParams& osc, const KernelParams& kp,
                                    ResponseType resp, double t, double t_prime) {
    const int b = deriv_order(resp);
    return osc.mass * se_kernel_deriv(kp, DerivOrder(2, b), t, t_prime) +
           osc.damping_coeff() * se_kernel_deriv(kp, DerivOrder(1, b), t, t_prime) +
           osc.stiffness() * se_kernel_deriv(kp, DerivOrder(0, b), t, t_prime);
}

/// Force auto-covariance: the oscillator operator applied to both kernel
/// arguments. Expanding both operators gives a 3x3 sum of weighted
/// derivative kernels with weights (k_s, c, m) indexed by derivative order.
inline double force_force_kernel(const OscillatorParams& osc, const KernelParams& kp, double t,
                                 double t_prime) {
    const double w[3] = {osc.stiffness(), osc.damping_coeff(), osc.mass};
    double sum = 0.0;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            sum += w[a] * w[b] * se_kernel_deriv(kp, DerivOrder(a, b), t, t_prime);
    return sum;
}

/// Integrates the oscillator through the sampled forcing with fixed-step
/// RK4 at the forcing rate. Forcing between samples is taken as the
/// endpoint average at the half step. Acceleration is recovered from the
/// equation of motion rather than by differencing.
inline ResponseRecord simulate_response(const OscillatorParams& osc, const ForcingSignal& forcing,
                                        double u0, double v0) {
    const Eigen::Index n = forcing.times.size();
    if (n < 2) throw ConfigError("simulate_response: need at least two forcing samples");
    if (!(std::isfinite(u0) && std::isfinite(v0)))
        throw ConfigError("simulate_response: initial conditions must be finite");

    const double h = forcing.times[1] - forcing.times[0];
    for (Eigen::Index i = 1; i < n; ++i) {
        const double dt = forcing.times[i] - forcing.times[i - 1];
        if (std::abs(dt - h) > 1e-9 * h)
            throw ConfigError("simulate_response: forcing grid must be uniform (step " +
                              std::to_string(i) + " has dt=" + std::to_string(dt) +
                              ", expected " + std::to_string(h) + ")");
    }

    const double c = osc.damping_coeff();
    const double ks = osc.stiffness();
    const double m = osc.mass;

    ResponseRecord rec;
    rec.times = forcing.times;
    rec.u.resize(n);
    rec.u_dot.resize(n);
    rec.u_ddot.resize(n);

    Eigen::VectorXd state(2);
    state << u0, v0;
    rec.u[0] = u0;
    rec.u_dot[0] = v0;

    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        const double f_sub[3] = {forcing.values[i], detail::midpoint_sample(forcing.values, i),
                                 forcing.values[i + 1]};
        auto deriv = [&](int sub, const Eigen::VectorXd& s) {
            Eigen::VectorXd d(2);
            d[0] = s[1];
            d[1] = detail::modal_acceleration(f_sub[sub], c, ks, m, s[0], s[1]);
            return d;
        };
        detail::rk4_step(deriv, h, state);
        rec.u[i + 1] = state[0];
        rec.u_dot[i + 1] = state[1];
    }
    for (Eigen::Index i = 0; i < n; ++i)
        rec.u_ddot[i] =
            detail::modal_acceleration(forcing.values[i], c, ks, m, rec.u[i], rec.u_dot[i]);
    return rec;
}

}  // namespace forcegp
