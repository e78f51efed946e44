#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "forcegp/gp_core.hpp"

using namespace forcegp;

namespace {

Eigen::VectorXd sorted_times(std::mt19937_64& rng, int n, double span) {
    std::uniform_real_distribution<double> unif(0.0, span);
    std::vector<double> t(n);
    for (auto& x : t) x = unif(rng);
    std::sort(t.begin(), t.end());
    for (std::size_t i = 1; i < t.size(); ++i)
        if (t[i] <= t[i - 1]) t[i] = t[i - 1] + 1e-4;
    return Eigen::Map<Eigen::VectorXd>(t.data(), n);
}

MeasurementSet random_mixed_set(std::mt19937_64& rng, int n_disp, int n_vel, int n_acc) {
    MeasurementSet data;
    auto wave = [](const Eigen::VectorXd& t, double w, int order) {
        Eigen::VectorXd v(t.size());
        for (Eigen::Index i = 0; i < t.size(); ++i) {
            switch (order) {
                case 0: v[i] = std::sin(w * t[i]); break;
                case 1: v[i] = w * std::cos(w * t[i]); break;
                default: v[i] = -w * w * std::sin(w * t[i]); break;
            }
        }
        return v;
    };
    if (n_disp > 0) {
        Eigen::VectorXd t = sorted_times(rng, n_disp, 3.0);
        data.set(ResponseType::disp, t, wave(t, 2.1, 0));
    }
    if (n_vel > 0) {
        Eigen::VectorXd t = sorted_times(rng, n_vel, 3.0);
        data.set(ResponseType::vel, t, wave(t, 2.1, 1));
    }
    if (n_acc > 0) {
        Eigen::VectorXd t = sorted_times(rng, n_acc, 3.0);
        data.set(ResponseType::acc, t, wave(t, 2.1, 2));
    }
    return data;
}

}  // namespace

TEST_CASE("measurement set bookkeeping", "[gp_core]") {
    MeasurementSet data;
    CHECK_THROWS_AS(data.validate(), ConfigError);

    Eigen::VectorXd t(3);
    t << 0.0, 1.0, 2.0;
    Eigen::VectorXd v(3);
    v << 0.5, -0.25, 0.125;
    data.set(ResponseType::vel, t, v);
    CHECK(data.has(ResponseType::vel));
    CHECK_FALSE(data.has(ResponseType::disp));
    CHECK(data.total_count() == 3);
    CHECK(data.offset(ResponseType::vel) == 0);
    CHECK(data.present().size() == 1);

    Eigen::VectorXd bad(3);
    bad << 0.0, 0.0, 1.0;  // not strictly increasing
    CHECK_THROWS_AS(data.set(ResponseType::disp, bad, v), ConfigError);

    data.set(ResponseType::disp, t, v);
    CHECK(data.offset(ResponseType::disp) == 0);
    CHECK(data.offset(ResponseType::vel) == 3);  // stacked order [disp, vel, acc]
}

TEST_CASE("covariance assembly", "[gp_core]") {
    Eigen::VectorXd t(3);
    t << 0.0, 0.5, 1.3;
    Eigen::VectorXd v(3);
    v << 1.0, 2.0, 3.0;

    SECTION("single noise-free displacement block reproduces the SE kernel") {
        MeasurementSet data;
        data.set(ResponseType::disp, t, v);
        Hyperparameters theta(KernelParams(1.2, 0.7));
        theta.noise_for(ResponseType::disp) = 0.0;
        const Eigen::MatrixXd K = assemble_covariance(theta, data);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                CHECK(K(i, j) == se_kernel(theta.kernel, t[i], t[j]));
    }

    SECTION("noise adds its square to the diagonal only") {
        MeasurementSet data;
        data.set(ResponseType::disp, t, v);
        Hyperparameters clean(KernelParams(1.2, 0.7));
        clean.noise_for(ResponseType::disp) = 0.0;
        Hyperparameters noisy = clean;
        noisy.noise_for(ResponseType::disp) = 0.1;
        const Eigen::MatrixXd K0 = assemble_covariance(clean, data);
        const Eigen::MatrixXd K1 = assemble_covariance(noisy, data);
        CHECK(((K1 - K0).diagonal().array() - 0.01).abs().maxCoeff() < 1e-15);
        Eigen::MatrixXd off = K1 - K0;
        off.diagonal().setZero();
        CHECK(off.cwiseAbs().maxCoeff() == 0.0);
    }

    SECTION("theta/data availability mismatch is rejected") {
        MeasurementSet data;
        data.set(ResponseType::disp, t, v);
        Hyperparameters theta(KernelParams(1.0, 1.0));
        CHECK_THROWS_AS(assemble_covariance(theta, data), ConfigError);  // missing noise
        theta.noise_for(ResponseType::disp) = 0.0;
        theta.noise_for(ResponseType::acc) = 0.1;  // noise for absent data
        CHECK_THROWS_AS(assemble_covariance(theta, data), ConfigError);
    }

    SECTION("three-type assembly: symmetry, cross-block transpose, PSD") {
        std::mt19937_64 rng(1);
        MeasurementSet data = random_mixed_set(rng, 5, 5, 5);
        Hyperparameters theta(KernelParams(0.8, 0.5));
        for (ResponseType ty : kResponseTypes) theta.noise_for(ty) = 0.05;
        const Eigen::MatrixXd K = assemble_covariance(theta, data);
        REQUIRE(K.rows() == 15);
        CHECK((K - K.transpose()).cwiseAbs().maxCoeff() == 0.0);
        CHECK(K.block(5, 10, 5, 5).transpose() == K.block(10, 5, 5, 5));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K);
        CHECK(eig.eigenvalues().minCoeff() > 0.0);
    }

    SECTION("adding a data type leaves the shared block unchanged") {
        std::mt19937_64 rng(2);
        MeasurementSet one = random_mixed_set(rng, 6, 0, 0);
        MeasurementSet two = one;
        Eigen::VectorXd tv(4);
        tv << 0.1, 0.9, 1.7, 2.8;
        two.set(ResponseType::vel, tv, Eigen::VectorXd::Ones(4));

        Hyperparameters theta1(KernelParams(1.0, 0.6));
        theta1.noise_for(ResponseType::disp) = 0.02;
        Hyperparameters theta2 = theta1;
        theta2.noise_for(ResponseType::vel) = 0.3;

        const Eigen::MatrixXd K1 = assemble_covariance(theta1, one);
        const Eigen::MatrixXd K2 = assemble_covariance(theta2, two);
        CHECK((K2.topLeftCorner(6, 6) - K1).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("factorization", "[gp_core]") {
    SECTION("identity") {
        const FactoredCovariance f = factorize(Eigen::MatrixXd::Identity(4, 4));
        CHECK(f.log_det() == Catch::Approx(0.0).margin(1e-14));
        CHECK(f.jitter_rel() == 0.0);
        Eigen::VectorXd b(4);
        b << 1, 2, 3, 4;
        CHECK((f.solve(b) - b).cwiseAbs().maxCoeff() < 1e-14);
    }

    SECTION("2x2 with determinant 3") {
        Eigen::MatrixXd K(2, 2);
        K << 2, 1, 1, 2;
        const FactoredCovariance f = factorize(K);
        CHECK(f.log_det() == Catch::Approx(std::log(3.0)));
    }

    SECTION("near-duplicate rows succeed only via jitter, which is reported") {
        Eigen::VectorXd t(3);
        t << 0.0, 1e-9, 2.0;  // two nearly coincident times, no noise
        MeasurementSet data;
        data.set(ResponseType::disp, t, Eigen::VectorXd::Ones(3));
        Hyperparameters theta(KernelParams(1.0, 1.0));
        theta.noise_for(ResponseType::disp) = 0.0;
        const FactoredCovariance f = factorize(assemble_covariance(theta, data));
        CHECK(f.jitter_rel() > 0.0);
        CHECK(std::isfinite(f.log_det()));
    }

    SECTION("hopeless matrix raises the ladder error") {
        Eigen::MatrixXd K(2, 2);
        K << 1.0, 5.0, 5.0, 1.0;  // indefinite far beyond any jitter
        CHECK_THROWS_AS(factorize(K), IllConditionedError);
        try {
            factorize(K);
        } catch (const IllConditionedError& e) {
            CHECK(e.jitter_ladder.size() == 4);
            CHECK(e.jitter_ladder.back() == 1e-6);
        }
    }

    SECTION("non-finite input is rejected") {
        Eigen::MatrixXd K = Eigen::MatrixXd::Identity(2, 2);
        K(0, 1) = std::nan("");
        CHECK_THROWS_AS(factorize(K), NumericalError);
    }
}

TEST_CASE("log marginal likelihood value", "[gp_core]") {
    SECTION("single unit-variance point at zero") {
        MeasurementSet data;
        Eigen::VectorXd t(1), v(1);
        t << 0.0;
        v << 0.0;
        data.set(ResponseType::disp, t, v);
        Hyperparameters theta(KernelParams(1.0, 1.0));
        theta.noise_for(ResponseType::disp) = 0.0;
        CHECK(log_marginal_value(theta, data) ==
              Catch::Approx(-0.5 * std::log(2.0 * M_PI)).epsilon(1e-10));
        CHECK(log_marginal_value(theta, data) == Catch::Approx(-0.9189).margin(1e-4));
    }

    SECTION("modelling genuinely noisy data as noise-free never wins") {
        std::mt19937_64 rng(33);
        std::normal_distribution<double> gauss(0.0, 1.0);
        Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(40, 0.0, 4.0);
        Eigen::VectorXd v(40);
        for (Eigen::Index i = 0; i < 40; ++i)
            v[i] = std::sin(2.0 * t[i]) + 0.2 * gauss(rng);
        MeasurementSet data;
        data.set(ResponseType::disp, t, v);

        Hyperparameters noise_free(KernelParams(1.0, 0.5));
        noise_free.noise_for(ResponseType::disp) = 0.0;
        Hyperparameters with_noise(KernelParams(1.0, 0.5));
        with_noise.noise_for(ResponseType::disp) = 0.2;
        CHECK(log_marginal_value(noise_free, data) < log_marginal_value(with_noise, data));
    }
}

TEST_CASE("likelihood gradient matches finite differences", "[gp_core]") {
    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<double> unif01(0.0, 1.0);

    for (int fixture = 0; fixture < 20; ++fixture) {
        const int nd = 4 + static_cast<int>(unif01(rng) * 10);
        const int nv = (fixture % 2 == 0) ? 3 + static_cast<int>(unif01(rng) * 8) : 0;
        const int na = (fixture % 3 == 0) ? 3 + static_cast<int>(unif01(rng) * 8) : 0;
        MeasurementSet data = random_mixed_set(rng, nd, nv, na);

        Hyperparameters theta(KernelParams(0.5 + unif01(rng), 0.3 + unif01(rng)));
        for (ResponseType ty : kResponseTypes)
            if (data.has(ty)) theta.noise_for(ty) = 0.05 + 0.3 * unif01(rng);

        const auto free_ids = all_free_params(data);
        const LikelihoodResult res = log_marginal_likelihood(theta, data, free_ids);

        auto value_at = [&](const Hyperparameters& th) { return log_marginal_value(th, data); };
        const double h = 1e-6;
        for (std::size_t p = 0; p < free_ids.size(); ++p) {
            auto perturbed = [&](double factor) {
                Hyperparameters th = theta;
                switch (free_ids[p]) {
                    case ParamId::sigma_s:
                        th = Hyperparameters(
                            KernelParams(theta.kernel.sigma_s * factor, theta.kernel.ell));
                        th.noise = theta.noise;
                        break;
                    case ParamId::ell:
                        th = Hyperparameters(
                            KernelParams(theta.kernel.sigma_s, theta.kernel.ell * factor));
                        th.noise = theta.noise;
                        break;
                    case ParamId::noise_disp:
                        *th.noise_for(ResponseType::disp) *= factor;
                        break;
                    case ParamId::noise_vel:
                        *th.noise_for(ResponseType::vel) *= factor;
                        break;
                    case ParamId::noise_acc:
                        *th.noise_for(ResponseType::acc) *= factor;
                        break;
                }
                return th;
            };
            // central difference in log space: theta * exp(+/- h)
            const double fd =
                (value_at(perturbed(std::exp(h))) - value_at(perturbed(std::exp(-h)))) /
                (2.0 * h);
            INFO("fixture " << fixture << " param " << param_name(free_ids[p]));
            const double denom = std::max(std::abs(fd), 1e-6);
            CHECK(std::abs(res.grad[static_cast<Eigen::Index>(p)] - fd) / denom < 1e-5);
        }
    }
}
