#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "forcegp/oscillator.hpp"
#include "support/finite_diff.hpp"

using namespace forcegp;

namespace {

/// Analytic response of an underdamped oscillator to F = sin(omega_n t)
/// from rest: resonant steady state plus the decaying transient.
double resonant_solution(const OscillatorParams& osc, double t) {
    const double ks = osc.stiffness();
    const double wn = osc.omega_n;
    const double zeta = osc.zeta;
    const double wd = wn * std::sqrt(1.0 - zeta * zeta);
    const double amp = 1.0 / (2.0 * zeta * ks);
    const double A = amp;                    // u(0) = 0
    const double B = zeta * wn * A / wd;     // u'(0) = 0
    return std::exp(-zeta * wn * t) * (A * std::cos(wd * t) + B * std::sin(wd * t)) -
           amp * std::cos(wn * t);
}

ForcingSignal harmonic_forcing(double omega, double fs, double duration) {
    const auto n = static_cast<Eigen::Index>(std::llround(duration * fs)) + 1;
    Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(n, 0.0, static_cast<double>(n - 1) / fs);
    Eigen::VectorXd f(n);
    for (Eigen::Index i = 0; i < n; ++i) f[i] = std::sin(omega * t[i]);
    return ForcingSignal(t, f);
}

}  // namespace

TEST_CASE("oscillator parameter validation", "[oscillator]") {
    CHECK_THROWS_AS(OscillatorParams(0.0, 0.05, 1.0), ConfigError);
    CHECK_THROWS_AS(OscillatorParams(1.0, 1.0, 1.0), ConfigError);  // critically damped
    CHECK_THROWS_AS(OscillatorParams(1.0, -0.1, 1.0), ConfigError);
    CHECK_THROWS_AS(OscillatorParams(1.0, 0.05, 0.0), ConfigError);
    const OscillatorParams osc(2.0, 0.1, 3.0);
    CHECK(osc.damping_coeff() == Catch::Approx(2.0 * 2.0 * 0.1 * 3.0));
    CHECK(osc.stiffness() == Catch::Approx(2.0 * 9.0));
}

TEST_CASE("response kernel values", "[oscillator]") {
    const KernelParams kp(1.0, 1.0);
    CHECK(response_kernel(kp, ResponseType::vel, ResponseType::vel, 0.2, 0.2) ==
          Catch::Approx(1.0));
    CHECK(response_kernel(kp, ResponseType::disp, ResponseType::acc, 0.2, 0.2) ==
          Catch::Approx(-1.0));
    // swap symmetry
    CHECK(response_kernel(kp, ResponseType::acc, ResponseType::disp, 0.9, 0.1) ==
          response_kernel(kp, ResponseType::disp, ResponseType::acc, 0.1, 0.9));
}

TEST_CASE("force-response kernel", "[oscillator]") {
    const KernelParams kp(1.0, 1.0);
    const OscillatorParams osc(1.0, 0.05, 2.0 * M_PI);

    SECTION("zero-lag value equals operator on zero-lag derivatives") {
        // m*(-sigma^2/ell^2) + c*0 + k_s*sigma^2 = omega_n^2 - 1
        const double expected = osc.omega_n * osc.omega_n - 1.0;
        CHECK(force_response_kernel(osc, kp, ResponseType::disp, 0.4, 0.4) ==
              Catch::Approx(expected).epsilon(1e-12));
        CHECK(expected == Catch::Approx(38.4784).margin(5e-4));
    }

    SECTION("zero damping removes the first-derivative term") {
        const OscillatorParams undamped(1.3, 0.0, 4.0);
        const double t = 0.8;
        const double expected =
            undamped.mass * se_kernel_deriv(kp, DerivOrder(2, 0), t, t) +
            undamped.stiffness() * se_kernel(kp, t, t);
        CHECK(force_response_kernel(undamped, kp, ResponseType::disp, t, t) ==
              Catch::Approx(expected));
    }

    SECTION("matches finite-difference operator application") {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> unif(-1.5, 1.5);
        auto base = [&](ResponseType resp, double t, double tp) {
            return response_kernel(kp, ResponseType::disp, resp, t, tp);
        };
        for (int trial = 0; trial < 50; ++trial) {
            const double t = unif(rng), tp = unif(rng);
            for (ResponseType resp : kResponseTypes) {
                auto in_first = [&](double tt) { return base(resp, tt, tp); };
                const double h = 1e-2;
                const double want = osc.mass * oracles::d2(in_first, t, h) +
                                    osc.damping_coeff() * oracles::d1(in_first, t, h) +
                                    osc.stiffness() * in_first(t);
                const double got = force_response_kernel(osc, kp, resp, t, tp);
                CHECK(oracles::rel_err(got, want, 1e-6) < 1e-5);
            }
        }
    }
}

TEST_CASE("force-force kernel", "[oscillator]") {
    const KernelParams kp(1.0, 1.0);
    const OscillatorParams osc(1.0, 0.05, 2.0 * M_PI);

    SECTION("zero-lag closed form against double operator oracle") {
        const double c = osc.damping_coeff();
        const double ks = osc.stiffness();
        const double closed = 3.0 + c * c - 2.0 * ks + ks * ks;  // sigma=ell=1
        CHECK(force_force_kernel(osc, kp, 0.3, 0.3) == Catch::Approx(closed).epsilon(1e-12));

        // independent check: operator applied twice by finite differences
        auto k_fu = [&](double t, double tp) {
            return force_response_kernel(osc, kp, ResponseType::disp, t, tp);
        };
        auto in_second = [&](double tp) { return k_fu(0.3, tp); };
        const double h = 1e-2;
        const double wantFF = osc.mass * oracles::d2(in_second, 0.3, h) +
                              osc.damping_coeff() * oracles::d1(in_second, 0.3, h) +
                              osc.stiffness() * in_second(0.3);
        CHECK(oracles::rel_err(force_force_kernel(osc, kp, 0.3, 0.3), wantFF) < 1e-5);
    }

    SECTION("degenerates to the acceleration kernel as the operator loses damping and stiffness") {
        const OscillatorParams nearly_free(1.0, 0.0, 1e-6);
        const double got = force_force_kernel(nearly_free, kp, 0.7, 0.1);
        const double want = se_kernel_deriv(kp, DerivOrder(2, 2), 0.7, 0.1);
        CHECK(oracles::rel_err(got, want) < 1e-8);
    }

    SECTION("symmetry on random pairs") {
        std::mt19937_64 rng(9);
        std::uniform_real_distribution<double> unif(-3.0, 3.0);
        for (int i = 0; i < 100; ++i) {
            const double t = unif(rng), tp = unif(rng);
            const double a = force_force_kernel(osc, kp, t, tp);
            const double b = force_force_kernel(osc, kp, tp, t);
            CHECK(std::abs(a - b) <= 1e-12 * std::abs(force_force_kernel(osc, kp, t, t)));
        }
    }
}

TEST_CASE("simulate_response basics", "[oscillator]") {
    const OscillatorParams osc(1.0, 0.05, 2.0 * M_PI);

    SECTION("zero forcing, zero ICs stays at rest") {
        Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(101, 0.0, 1.0);
        const ResponseRecord rec =
            simulate_response(osc, ForcingSignal(t, Eigen::VectorXd::Zero(101)), 0.0, 0.0);
        CHECK(rec.u.cwiseAbs().maxCoeff() == 0.0);
        CHECK(rec.u_dot.cwiseAbs().maxCoeff() == 0.0);
        CHECK(rec.u_ddot.cwiseAbs().maxCoeff() == 0.0);
    }

    SECTION("non-uniform grid is rejected") {
        Eigen::VectorXd t(4);
        t << 0.0, 0.1, 0.25, 0.3;
        CHECK_THROWS_AS(simulate_response(osc, ForcingSignal(t, Eigen::VectorXd::Zero(4)), 0, 0),
                        ConfigError);
    }

    SECTION("static load settles at F/k_s") {
        const double fs = 100.0;
        const auto n = static_cast<Eigen::Index>(std::llround(20.0 * fs)) + 1;
        Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(n, 0.0, static_cast<double>(n - 1) / fs);
        const ResponseRecord rec = simulate_response(
            osc, ForcingSignal(t, Eigen::VectorXd::Constant(n, osc.stiffness())), 0.0, 0.0);
        CHECK(rec.u[n - 1] == Catch::Approx(1.0).margin(2e-3));
    }

    SECTION("resonant forcing reaches the analytic steady-state amplitude") {
        const ResponseRecord rec =
            simulate_response(osc, harmonic_forcing(osc.omega_n, 200.0, 30.0), 0.0, 0.0);
        double peak = 0.0;
        for (Eigen::Index i = rec.times.size() - 1000; i < rec.times.size(); ++i)
            peak = std::max(peak, std::abs(rec.u[i]));
        CHECK(peak == Catch::Approx(1.0 / (2.0 * 0.05 * osc.stiffness())).epsilon(5e-3));
    }

    SECTION("acceleration satisfies the equation of motion") {
        const ForcingSignal f = harmonic_forcing(3.0, 100.0, 2.0);
        const ResponseRecord rec = simulate_response(osc, f, 0.1, -0.2);
        for (Eigen::Index i = 0; i < f.times.size(); i += 17) {
            const double residual = osc.mass * rec.u_ddot[i] +
                                    osc.damping_coeff() * rec.u_dot[i] +
                                    osc.stiffness() * rec.u[i] - f.values[i];
            CHECK(std::abs(residual) < 1e-12);
        }
    }
}

TEST_CASE("integrator is fourth order", "[oscillator]") {
    const OscillatorParams osc(1.0, 0.05, 2.0 * M_PI);
    auto max_err = [&](double fs) {
        const ResponseRecord rec =
            simulate_response(osc, harmonic_forcing(osc.omega_n, fs, 5.0), 0.0, 0.0);
        double e = 0.0;
        for (Eigen::Index i = 0; i < rec.times.size(); ++i)
            e = std::max(e, std::abs(rec.u[i] - resonant_solution(osc, rec.times[i])));
        return e;
    };
    const double e1 = max_err(50.0);
    const double e2 = max_err(100.0);
    const double ratio = e1 / e2;
    // RK4 with midpoint forcing interpolation: halving the step cuts the
    // dominant error term by about 2^4.
    CHECK(ratio > 10.0);
    CHECK(ratio < 24.0);
}

TEST_CASE("free vibration dissipates energy", "[oscillator]") {
    const OscillatorParams osc(1.0, 0.02, 2.0 * M_PI);
    const auto n = static_cast<Eigen::Index>(std::llround(10.0 * 200.0)) + 1;
    Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(n, 0.0, static_cast<double>(n - 1) / 200.0);
    const ResponseRecord rec =
        simulate_response(osc, ForcingSignal(t, Eigen::VectorXd::Zero(n)), 0.3, 0.0);
    double prev = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double energy = 0.5 * osc.stiffness() * rec.u[i] * rec.u[i] +
                              0.5 * osc.mass * rec.u_dot[i] * rec.u_dot[i];
        CHECK(energy <= prev * (1.0 + 1e-12));
        prev = energy;
    }
}
