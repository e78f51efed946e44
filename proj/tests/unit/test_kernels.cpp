#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "forcegp/kernels.hpp"
#include "support/finite_diff.hpp"

using namespace forcegp;

TEST_CASE("SE kernel basic values", "[kernels]") {
    CHECK(se_kernel(KernelParams(1.0, 1.0), 0.0, 0.0) == Catch::Approx(1.0));
    CHECK(se_kernel(KernelParams(2.0, 1.0), 0.0, 0.0) == Catch::Approx(4.0));
    CHECK(se_kernel(KernelParams(1.0, 1.0), 1.0, 0.0) == Catch::Approx(std::exp(-0.5)));
    CHECK(se_kernel(KernelParams(0.7, 0.3), 1.2, -0.4) ==
          se_kernel(KernelParams(0.7, 0.3), -0.4, 1.2));
}

TEST_CASE("parameter validation", "[kernels]") {
    CHECK_THROWS_AS(KernelParams(0.0, 1.0), ConfigError);
    CHECK_THROWS_AS(KernelParams(1.0, -2.0), ConfigError);
    CHECK_THROWS_AS(KernelParams(std::nan(""), 1.0), ConfigError);
    CHECK_THROWS_AS(DerivOrder(3, 0), std::invalid_argument);
    CHECK_THROWS_AS(DerivOrder(0, -1), std::invalid_argument);
}

TEST_CASE("derivative kernel values at zero lag", "[kernels]") {
    const KernelParams p(1.0, 1.0);
    CHECK(se_kernel_deriv(p, DerivOrder(1, 1), 0.7, 0.7) == Catch::Approx(1.0));
    CHECK(se_kernel_deriv(p, DerivOrder(2, 2), -2.0, -2.0) == Catch::Approx(3.0));

    const KernelParams q(1.3, 0.4);
    const double s2 = q.sigma_s * q.sigma_s;
    CHECK(se_kernel_deriv(q, DerivOrder(1, 1), 0.0, 0.0) ==
          Catch::Approx(s2 / (q.ell * q.ell)));
    CHECK(se_kernel_deriv(q, DerivOrder(2, 2), 0.0, 0.0) ==
          Catch::Approx(3.0 * s2 / std::pow(q.ell, 4)));
}

TEST_CASE("sign structure at zero lag", "[kernels]") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unif(0.1, 3.0);
    for (int i = 0; i < 25; ++i) {
        const KernelParams p(unif(rng), unif(rng));
        const double t = unif(rng);
        CHECK(se_kernel_deriv(p, DerivOrder(1, 1), t, t) > 0.0);
        CHECK(se_kernel_deriv(p, DerivOrder(2, 0), t, t) < 0.0);
        CHECK(se_kernel_deriv(p, DerivOrder(2, 2), t, t) > 0.0);
    }
}

TEST_CASE("derivative kernels match finite differences", "[kernels]") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> unif01(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const double sigma = std::exp(unif01(rng) * 2.0 - 1.0);
        const double ell = std::exp(unif01(rng) * 2.0 - 1.0);
        const KernelParams p(sigma, ell);
        const double t = unif01(rng) * 4.0 - 2.0;
        const double tp = t + (unif01(rng) * 4.0 - 2.0) * ell;
        const double h = 5e-3 * ell;

        auto base = [&](long double a, long double b) {
            return oracles::se_kernel_ld(sigma, ell, a, b);
        };
        for (int a = 0; a <= 2; ++a) {
            for (int b = 0; b <= 2; ++b) {
                const double got = se_kernel_deriv(p, DerivOrder(a, b), t, tp);
                const double want = oracles::mixed_partial_ld(base, a, b, t, tp, h);
                const double scale = sigma * sigma / forcegp::detail::pow_int(ell, a + b);
                INFO("order (" << a << "," << b << ") t=" << t << " tp=" << tp);
                CHECK(oracles::rel_err(got, want, 1e-8 * scale) < 1e-6);
            }
        }
    }
}

TEST_CASE("transpose symmetry is exact", "[kernels]") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unif(-3.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        const KernelParams p(0.5 + std::abs(unif(rng)), 0.2 + std::abs(unif(rng)));
        const double t = unif(rng), tp = unif(rng);
        for (int a = 0; a <= 2; ++a)
            for (int b = 0; b <= 2; ++b)
                CHECK(se_kernel_deriv(p, DerivOrder(a, b), t, tp) ==
                      se_kernel_deriv(p, DerivOrder(b, a), tp, t));
    }
}

TEST_CASE("hyperparameter gradients", "[kernels]") {
    SECTION("closed-form values at zero lag") {
        const KernelParams p(1.7, 0.9);
        const KernelGrad g = se_kernel_grad(p, DerivOrder(0, 0), 0.4, 0.4);
        CHECK(g.d_sigma_s == Catch::Approx(2.0 * p.sigma_s));
        CHECK(g.d_ell == Catch::Approx(0.0).margin(1e-14));
    }

    SECTION("finite-difference consistency") {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> unif01(0.0, 1.0);
        for (int trial = 0; trial < 60; ++trial) {
            const double sigma = std::exp(unif01(rng) * 2.0 - 1.0);
            const double ell = std::exp(unif01(rng) * 2.0 - 1.0);
            const double t = unif01(rng) * 2.0;
            const double tp = t + (unif01(rng) * 3.0 - 1.5) * ell;
            const DerivOrder ord(static_cast<int>(unif01(rng) * 3.0) % 3,
                                 static_cast<int>(unif01(rng) * 3.0) % 3);
            const KernelGrad g = se_kernel_grad(KernelParams(sigma, ell), ord, t, tp);

            const double hs = 1e-5 * sigma;
            const double fd_sigma =
                (se_kernel_deriv(KernelParams(sigma + hs, ell), ord, t, tp) -
                 se_kernel_deriv(KernelParams(sigma - hs, ell), ord, t, tp)) /
                (2.0 * hs);
            const double hl = 1e-5 * ell;
            const double fd_ell =
                (se_kernel_deriv(KernelParams(sigma, ell + hl), ord, t, tp) -
                 se_kernel_deriv(KernelParams(sigma, ell - hl), ord, t, tp)) /
                (2.0 * hl);

            const double scale =
                sigma * sigma / forcegp::detail::pow_int(ell, ord.total() + 1);
            CHECK(oracles::rel_err(g.d_sigma_s, fd_sigma, 1e-8 * scale) < 1e-6);
            CHECK(oracles::rel_err(g.d_ell, fd_ell, 1e-8 * scale) < 1e-6);
        }
    }
}

TEST_CASE("same-order derivative kernels are positive semidefinite", "[kernels]") {
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> unif01(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const KernelParams p(0.3 + unif01(rng), 0.2 + unif01(rng));
        const int n = 12;
        Eigen::VectorXd t(n);
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            acc += 0.05 + unif01(rng);
            t[i] = acc;
        }
        for (int a = 0; a <= 2; ++a) {
            Eigen::MatrixXd K(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    K(i, j) = se_kernel_deriv(p, DerivOrder(a, a), t[i], t[j]);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K);
            CHECK(eig.eigenvalues().minCoeff() >= -1e-8 * K.trace());
        }
    }
}
