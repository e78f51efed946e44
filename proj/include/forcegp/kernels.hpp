#pragma once

#include <cmath>
#include <stdexcept>

#include "forcegp/errors.hpp"

namespace forcegp {

/// Parameters of the squared-exponential covariance
///   k(t, t') = sigma_s^2 * exp(-(t - t')^2 / (2 ell^2)).
struct KernelParams {
    double sigma_s;  ///< amplitude standard deviation (signal units)
    double ell;      ///< length scale (s)

    KernelParams(double sigma_s_, double ell_) : sigma_s(sigma_s_), ell(ell_) {
        if (!(std::isfinite(sigma_s) && sigma_s > 0.0))
            throw ConfigError("KernelParams: sigma_s must be finite and > 0");
        if (!(std::isfinite(ell) && ell > 0.0))
            throw ConfigError("KernelParams: ell must be finite and > 0");
    }
};

/// Partial-derivative order of a kernel in each time argument.
/// Only orders 0..2 per argument exist; anything else is unconstructible.
class DerivOrder {
public:
    constexpr DerivOrder(int a, int b) : a_(a), b_(b) {
        if (a < 0 || a > 2 || b < 0 || b > 2)
            throw std::invalid_argument("DerivOrder: orders must lie in 0..2");
    }

    constexpr int a() const { return a_; }
    constexpr int b() const { return b_; }
    constexpr int total() const { return a_ + b_; }

private:
    int a_;
    int b_;
};

/// Gradient of a kernel value with respect to the kernel hyperparameters.
struct KernelGrad {
    double d_sigma_s;
    double d_ell;
};

namespace detail {

/// Probabilists' Hermite polynomial He_n(u), n <= 5.
/// He_n appears in the n-th derivative of the Gaussian:
///   d^n/dr^n exp(-u^2/2) = (-1)^n ell^{-n} He_n(u) exp(-u^2/2),  u = r/ell.
inline double hermite(int n, double u) {
    const double u2 = u * u;
    switch (n) {
        case 0: return 1.0;
        case 1: return u;
        case 2: return u2 - 1.0;
        case 3: return u * (u2 - 3.0);
        case 4: return u2 * (u2 - 6.0) + 3.0;
        case 5: return u * (u2 * (u2 - 10.0) + 15.0);
        default: throw std::invalid_argument("hermite: order out of range");
    }
}

inline double pow_int(double x, int n) {
    double r = 1.0;
    for (int i = 0; i < n; ++i) r *= x;
    return r;
}

}  // namespace detail

/// Squared-exponential kernel value.
inline double se_kernel(const KernelParams& p, double t, double t_prime) {
    const double u = (t - t_prime) / p.ell;
    return p.sigma_s * p.sigma_s * std::exp(-0.5 * u * u);
}

/// Exact partial derivative d^{a+b} k / dt^a dt'^b of the SE kernel.
///
/// With r = t - t', u = r / ell and n = a + b the closed form is
///   (-1)^a * sigma_s^2 * ell^{-n} * He_n(u) * exp(-u^2/2),
/// since each d/dt contributes a factor d/dr and each d/dt' a factor -d/dr.
inline double se_kernel_deriv(const KernelParams& p, DerivOrder order, double t,
                              double t_prime) {
    const int n = order.total();
    const double u = (t - t_prime) / p.ell;
    const double sign = (order.a() % 2 == 0) ? 1.0 : -1.0;
    return sign * p.sigma_s * p.sigma_s * detail::pow_int(1.0 / p.ell, n) *
           detail::hermite(n, u) * std::exp(-0.5 * u * u);
}

/// Analytic gradient of se_kernel_deriv with respect to (sigma_s, ell).
///
/// The ell derivative follows from He_n'(u) - u He_n(u) = -He_{n+1}(u):
///   d/d ell = (-1)^a sigma_s^2 ell^{-(n+1)} e^{-u^2/2} (u He_{n+1}(u) - n He_n(u)).
inline KernelGrad se_kernel_grad(const KernelParams& p, DerivOrder order, double t,
                                 double t_prime) {
    const int n = order.total();
    const double u = (t - t_prime) / p.ell;
    const double sign = (order.a() % 2 == 0) ? 1.0 : -1.0;
    const double e = std::exp(-0.5 * u * u);
    const double inv_ell_n = detail::pow_int(1.0 / p.ell, n);
    const double k = sign * p.sigma_s * p.sigma_s * inv_ell_n * detail::hermite(n, u) * e;
    KernelGrad g;
    g.d_sigma_s = 2.0 * k / p.sigma_s;
    g.d_ell = sign * p.sigma_s * p.sigma_s * inv_ell_n / p.ell * e *
              (u * detail::hermite(n + 1, u) - n * detail::hermite(n, u));
    return g;
}

}  // namespace forcegp
